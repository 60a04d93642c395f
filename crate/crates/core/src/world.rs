//! Discrete-event shop environment: live resource instances, the clock,
//! event application, and the built-in action verb semantics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ActionSpec, Condition, FieldKind, FieldPath, FrId, Literal, CmpOp, ModelBundle, Operand,
    OperationId, ResourceTypeName, Verb,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Day {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl Day {
    pub const ALL: [Day; 7] = [
        Day::Mon,
        Day::Tue,
        Day::Wed,
        Day::Thu,
        Day::Fri,
        Day::Sat,
        Day::Sun,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Day::Mon => "mon",
            Day::Tue => "tue",
            Day::Wed => "wed",
            Day::Thu => "thu",
            Day::Fri => "fri",
            Day::Sat => "sat",
            Day::Sun => "sun",
        }
    }

    pub fn parse(s: &str) -> Option<Day> {
        Day::ALL.iter().copied().find(|d| d.as_str() == s)
    }
}

/// Day-of-week plus minutes since midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Timestamp {
    pub day: Day,
    pub minutes: u16,
}

impl Timestamp {
    pub fn new(day: Day, minutes: u16) -> Self {
        Timestamp { day, minutes }
    }
}

impl std::fmt::Display for Timestamp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {:02}:{:02}",
            self.day.as_str(),
            self.minutes / 60,
            self.minutes % 60
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldValue {
    Int(i64),
    Bool(bool),
    Text(String),
    EnumValue(String),
    Time(u16),
    Ref(String),
    /// Multiset of instance ids in insertion order; newest last.
    Set(Vec<String>),
}

impl FieldValue {
    pub fn from_literal(lit: &Literal) -> FieldValue {
        match lit {
            Literal::Int(v) => FieldValue::Int(*v),
            Literal::Bool(v) => FieldValue::Bool(*v),
            Literal::Text(v) => FieldValue::Text(v.clone()),
            Literal::EnumValue(v) => FieldValue::EnumValue(v.clone()),
            Literal::Time(v) => FieldValue::Time(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub ty: ResourceTypeName,
    pub id: String,
    pub fields: BTreeMap<String, FieldValue>,
}

/// Timeline event. Injection and retirement are forwarded to the engine and
/// leave the world untouched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    EnterSystem {
        shopper: String,
        fields: BTreeMap<String, FieldValue>,
    },
    AddItem {
        shopper: String,
        item: String,
    },
    RemoveItem {
        shopper: String,
        item: String,
    },
    Checkout {
        shopper: String,
    },
    StockChange {
        item: String,
        stock: i64,
        fields: BTreeMap<String, FieldValue>,
    },
    InjectRequirement {
        fragment: Box<ModelBundle>,
    },
    RetireRequirement {
        fr: FrId,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time: Timestamp,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("stock of `{item}` may not become negative ({stock})")]
    NegativeStock { item: String, stock: i64 },
    #[error("shopper `{0}` has no open order")]
    NoOpenOrder(String),
    #[error("item `{item}` is not in the open order of `{shopper}`")]
    ItemNotInOrder { shopper: String, item: String },
    #[error("instance `{0}` has an unexpected shape: {1}")]
    Corrupt(String, String),
}

/// One recorded field mutation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDiff {
    pub instance: String,
    pub field: String,
    pub old: Option<FieldValue>,
    pub new: FieldValue,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldDiff {
    pub changed: Vec<FieldDiff>,
    pub created: Vec<String>,
    pub deleted: Vec<String>,
}

impl WorldDiff {
    pub fn is_empty(&self) -> bool {
        self.changed.is_empty() && self.created.is_empty() && self.deleted.is_empty()
    }

    pub fn merge(&mut self, other: WorldDiff) {
        self.changed.extend(other.changed);
        self.created.extend(other.created);
        self.deleted.extend(other.deleted);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionStatus {
    Applied,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionOutcome {
    pub operation: OperationId,
    pub action: String,
    pub status: ActionStatus,
    pub diff: WorldDiff,
    pub bindings: BTreeMap<ResourceTypeName, String>,
}

impl ActionOutcome {
    pub fn applied(&self) -> bool {
        self.status == ActionStatus::Applied
    }
}

/// Per-iteration scratch state shared by the actions of one MAPE cycle.
/// Exemptions and checkout blocks do not outlive the iteration.
#[derive(Debug, Clone, Default)]
pub struct IterationCtx {
    pub exempt_items: BTreeSet<String>,
    pub blocked_checkouts: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("no binding for resource type `{0}`")]
    UnboundRootType(String),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("path `{0}` does not resolve against the world")]
    BadPath(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    pub instances: BTreeMap<String, Instance>,
    pub clock: Timestamp,
    order_seq: BTreeMap<String, u32>,
}

impl Default for Timestamp {
    fn default() -> Self {
        Timestamp::new(Day::Mon, 0)
    }
}

impl WorldState {
    pub fn new() -> Self {
        WorldState::default()
    }

    pub fn instance(&self, id: &str) -> Result<&Instance, WorldError> {
        self.instances
            .get(id)
            .ok_or_else(|| WorldError::UnknownInstance(id.to_string()))
    }

    /// The shopper's open order, if any.
    pub fn open_order_of(&self, shopper: &str) -> Option<&Instance> {
        self.instances.values().find(|inst| {
            inst.ty == "Order"
                && inst.fields.get("owner") == Some(&FieldValue::Ref(shopper.to_string()))
                && inst.fields.get("open") == Some(&FieldValue::Bool(true))
        })
    }

    pub fn shopper_redirected(&self, shopper: &str) -> bool {
        self.instances
            .get(shopper)
            .and_then(|inst| inst.fields.get("status"))
            .map(|v| *v == FieldValue::EnumValue("redirected".into()))
            .unwrap_or(false)
    }

    fn set_field(&mut self, instance: &str, field: &str, value: FieldValue, diff: &mut WorldDiff) {
        let inst = self.instances.get_mut(instance).expect("live instance");
        let old = inst.fields.insert(field.to_string(), value.clone());
        diff.changed.push(FieldDiff {
            instance: instance.to_string(),
            field: field.to_string(),
            old,
            new: value,
        });
    }

    /// Applies a timeline event. Injection/retirement and checkout
    /// finalisation are orchestrated by the engine; everything else mutates
    /// the world here and returns the diff.
    pub fn apply_event(&mut self, event: &Event) -> Result<WorldDiff, WorldError> {
        self.clock = event.time;
        let mut diff = WorldDiff::default();
        match &event.kind {
            EventKind::EnterSystem { shopper, fields } => {
                if !self.instances.contains_key(shopper) {
                    self.instances.insert(
                        shopper.clone(),
                        Instance {
                            ty: "Shopper".into(),
                            id: shopper.clone(),
                            fields: BTreeMap::from([
                                ("served".to_string(), FieldValue::Bool(false)),
                            ]),
                        },
                    );
                    diff.created.push(shopper.clone());
                }
                for (k, v) in fields {
                    self.set_field(shopper, k, v.clone(), &mut diff);
                }
                self.set_field(
                    shopper,
                    "status",
                    FieldValue::EnumValue("active".into()),
                    &mut diff,
                );
            }
            EventKind::AddItem { shopper, item } => {
                self.instance(shopper)?;
                self.instance(item)?;
                let order_id = match self.open_order_of(shopper) {
                    Some(order) => order.id.clone(),
                    None => {
                        let seq = self.order_seq.entry(shopper.clone()).or_insert(0);
                        *seq += 1;
                        let id = format!("o_{shopper}_{seq}");
                        self.instances.insert(
                            id.clone(),
                            Instance {
                                ty: "Order".into(),
                                id: id.clone(),
                                fields: BTreeMap::from([
                                    ("owner".to_string(), FieldValue::Ref(shopper.clone())),
                                    ("items".to_string(), FieldValue::Set(vec![])),
                                    ("size".to_string(), FieldValue::Int(0)),
                                    ("open".to_string(), FieldValue::Bool(true)),
                                ]),
                            },
                        );
                        diff.created.push(id.clone());
                        id
                    }
                };
                let (items, size) = self.order_items(&order_id)?;
                let mut items = items;
                items.push(item.clone());
                self.set_field(&order_id, "items", FieldValue::Set(items), &mut diff);
                self.set_field(&order_id, "size", FieldValue::Int(size + 1), &mut diff);
            }
            EventKind::RemoveItem { shopper, item } => {
                self.instance(shopper)?;
                let order_id = self
                    .open_order_of(shopper)
                    .map(|o| o.id.clone())
                    .ok_or_else(|| WorldError::NoOpenOrder(shopper.clone()))?;
                let (mut items, size) = self.order_items(&order_id)?;
                let pos = items
                    .iter()
                    .rposition(|i| i == item)
                    .ok_or_else(|| WorldError::ItemNotInOrder {
                        shopper: shopper.clone(),
                        item: item.clone(),
                    })?;
                items.remove(pos);
                self.set_field(&order_id, "items", FieldValue::Set(items), &mut diff);
                self.set_field(&order_id, "size", FieldValue::Int(size - 1), &mut diff);
            }
            EventKind::Checkout { .. } => {
                // Two-phase: rules and actions run against the open order
                // first, then the engine calls finalize_checkout.
            }
            EventKind::StockChange { item, stock, fields } => {
                if *stock < 0 {
                    return Err(WorldError::NegativeStock {
                        item: item.clone(),
                        stock: *stock,
                    });
                }
                if !self.instances.contains_key(item) {
                    self.instances.insert(
                        item.clone(),
                        Instance {
                            ty: "Item".into(),
                            id: item.clone(),
                            fields: BTreeMap::from([(
                                "category".to_string(),
                                FieldValue::EnumValue("general".into()),
                            )]),
                        },
                    );
                    diff.created.push(item.clone());
                }
                for (k, v) in fields {
                    self.set_field(item, k, v.clone(), &mut diff);
                }
                self.set_field(item, "stock", FieldValue::Int(*stock), &mut diff);
            }
            EventKind::InjectRequirement { .. } | EventKind::RetireRequirement { .. } => {}
        }
        Ok(diff)
    }

    /// The order's item multiset (insertion order) and recorded size.
    pub fn order_items(&self, order_id: &str) -> Result<(Vec<String>, i64), WorldError> {
        let order = self.instance(order_id)?;
        let items = match order.fields.get("items") {
            Some(FieldValue::Set(items)) => items.clone(),
            _ => {
                return Err(WorldError::Corrupt(
                    order_id.to_string(),
                    "missing items multiset".into(),
                ))
            }
        };
        let size = match order.fields.get("size") {
            Some(FieldValue::Int(n)) => *n,
            _ => {
                return Err(WorldError::Corrupt(
                    order_id.to_string(),
                    "missing size".into(),
                ))
            }
        };
        Ok((items, size))
    }

    /// Closes the shopper's open order and moves stock. Fails without
    /// mutation when any item lacks stock for the order's multiplicity.
    pub fn finalize_checkout(&mut self, shopper: &str) -> Result<WorldDiff, WorldError> {
        let order_id = self
            .open_order_of(shopper)
            .map(|o| o.id.clone())
            .ok_or_else(|| WorldError::NoOpenOrder(shopper.to_string()))?;
        let (items, _) = self.order_items(&order_id)?;
        let mut counts: BTreeMap<&str, i64> = BTreeMap::new();
        for item in &items {
            *counts.entry(item.as_str()).or_insert(0) += 1;
        }
        for (item, n) in &counts {
            let stock = match self.instance(item)?.fields.get("stock") {
                Some(FieldValue::Int(s)) => *s,
                _ => 0,
            };
            if stock - n < 0 {
                return Err(WorldError::NegativeStock {
                    item: item.to_string(),
                    stock: stock - n,
                });
            }
        }
        let mut diff = WorldDiff::default();
        let counts: Vec<(String, i64)> = counts
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        for (item, n) in counts {
            let stock = match self.instance(&item)?.fields.get("stock") {
                Some(FieldValue::Int(s)) => *s,
                _ => 0,
            };
            self.set_field(&item, "stock", FieldValue::Int(stock - n), &mut diff);
        }
        self.set_field(&order_id, "open", FieldValue::Bool(false), &mut diff);
        Ok(diff)
    }

    /// Resolves a field path to a value, starting from the bound instance of
    /// the path's root type. The clock binds implicitly.
    pub fn eval_path(
        &self,
        bindings: &BTreeMap<ResourceTypeName, String>,
        path: &FieldPath,
    ) -> Result<FieldValue, EvalError> {
        if path.root == "Clock" {
            return match path.segments.first().map(String::as_str) {
                Some("day") => Ok(FieldValue::EnumValue(self.clock.day.as_str().into())),
                Some("time") => Ok(FieldValue::Time(self.clock.minutes)),
                _ => Err(EvalError::BadPath(path.to_string())),
            };
        }
        let mut instance_id = bindings
            .get(&path.root)
            .ok_or_else(|| EvalError::UnboundRootType(path.root.clone()))?
            .clone();
        let mut value: Option<FieldValue> = None;
        for (i, seg) in path.segments.iter().enumerate() {
            if i > 0 {
                match value {
                    Some(FieldValue::Ref(next)) => instance_id = next,
                    _ => return Err(EvalError::BadPath(path.to_string())),
                }
            }
            let inst = self
                .instances
                .get(&instance_id)
                .ok_or_else(|| EvalError::UnknownInstance(instance_id.clone()))?;
            value = inst.fields.get(seg).cloned();
            if value.is_none() {
                return Err(EvalError::BadPath(path.to_string()));
            }
        }
        value.ok_or_else(|| EvalError::BadPath(path.to_string()))
    }

    /// Evaluates one condition under the given bindings. Enum ordering
    /// follows declaration order in the resource model.
    pub fn eval_condition(
        &self,
        bundle: &ModelBundle,
        bindings: &BTreeMap<ResourceTypeName, String>,
        cond: &Condition,
    ) -> Result<bool, EvalError> {
        let lhs = self.eval_path(bindings, &cond.lhs)?;
        let rhs = match &cond.rhs {
            Operand::Path(p) => self.eval_path(bindings, p)?,
            Operand::Literal(lit) => FieldValue::from_literal(lit),
        };
        let ord = compare_values(bundle, &lhs, &rhs)
            .ok_or_else(|| EvalError::BadPath(format!("{} vs {:?}", cond.lhs, cond.rhs)))?;
        Ok(match cond.op {
            CmpOp::Lt => ord == std::cmp::Ordering::Less,
            CmpOp::Le => ord != std::cmp::Ordering::Greater,
            CmpOp::Gt => ord == std::cmp::Ordering::Greater,
            CmpOp::Ge => ord != std::cmp::Ordering::Less,
            CmpOp::Eq => ord == std::cmp::Ordering::Equal,
            CmpOp::Ne => ord != std::cmp::Ordering::Equal,
        })
    }

    /// Conjunction of the rule's conditions.
    pub fn eval_rule(
        &self,
        bundle: &ModelBundle,
        bindings: &BTreeMap<ResourceTypeName, String>,
        rule: &crate::model::Rule,
    ) -> Result<bool, EvalError> {
        for cond in &rule.conditions {
            if !self.eval_condition(bundle, bindings, cond)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Runs one built-in action verb against the world.
    pub fn apply_action(
        &mut self,
        operation: &str,
        spec: &ActionSpec,
        bindings: &BTreeMap<ResourceTypeName, String>,
        ctx: &mut IterationCtx,
    ) -> ActionOutcome {
        let fail = |reason: &str| ActionOutcome {
            operation: operation.to_string(),
            action: spec.name.clone(),
            status: ActionStatus::Failed(reason.to_string()),
            diff: WorldDiff::default(),
            bindings: bindings.clone(),
        };
        let ok = |diff: WorldDiff| ActionOutcome {
            operation: operation.to_string(),
            action: spec.name.clone(),
            status: ActionStatus::Applied,
            diff,
            bindings: bindings.clone(),
        };

        match spec.verb {
            Verb::RemoveItem => {
                let (shopper, item) = match (bindings.get("Shopper"), bindings.get("Item")) {
                    (Some(s), Some(i)) => (s.clone(), i.clone()),
                    _ => return fail("unbound_target"),
                };
                if ctx.exempt_items.contains(&item) {
                    return fail("exempt");
                }
                match self.apply_event(&Event {
                    time: self.clock,
                    kind: EventKind::RemoveItem { shopper, item },
                }) {
                    Ok(diff) => ok(diff),
                    Err(WorldError::NoOpenOrder(_)) => fail("no_open_order"),
                    Err(WorldError::ItemNotInOrder { .. }) => fail("no_such_item"),
                    Err(e) => fail(&e.to_string()),
                }
            }
            Verb::RedirectOut => {
                let shopper = match bindings.get("Shopper") {
                    Some(s) => s.clone(),
                    None => return fail("unbound_target"),
                };
                if self.shopper_redirected(&shopper) {
                    return fail("already_redirected");
                }
                if !self.instances.contains_key(&shopper) {
                    return fail("unknown_shopper");
                }
                let mut diff = WorldDiff::default();
                self.set_field(
                    &shopper,
                    "status",
                    FieldValue::EnumValue("redirected".into()),
                    &mut diff,
                );
                ok(diff)
            }
            Verb::CapBasket => {
                let limit = match spec.params.get("limit") {
                    Some(Operand::Literal(Literal::Int(n))) => *n,
                    _ => return fail("missing_limit"),
                };
                let order_id = match bindings.get("Order") {
                    Some(o) => o.clone(),
                    None => return fail("unbound_target"),
                };
                let (items, size) = match self.order_items(&order_id) {
                    Ok(v) => v,
                    Err(_) => return fail("no_open_order"),
                };
                if size <= limit {
                    return ok(WorldDiff::default());
                }
                let removable = items
                    .iter()
                    .filter(|i| !ctx.exempt_items.contains(*i))
                    .count() as i64;
                if size - removable > limit {
                    return fail("exempt");
                }
                // Drop newest non-exempt entries until at the limit.
                let mut items = items;
                let mut removed = Vec::new();
                while (items.len() as i64) > limit {
                    let pos = items
                        .iter()
                        .rposition(|i| !ctx.exempt_items.contains(i))
                        .expect("removable item counted above");
                    removed.push(items.remove(pos));
                }
                let mut diff = WorldDiff::default();
                let new_size = items.len() as i64;
                self.set_field(&order_id, "items", FieldValue::Set(items), &mut diff);
                self.set_field(&order_id, "size", FieldValue::Int(new_size), &mut diff);
                ok(diff)
            }
            Verb::ExemptItem => {
                let item = match bindings.get("Item") {
                    Some(i) => i.clone(),
                    None => return fail("unbound_target"),
                };
                ctx.exempt_items.insert(item);
                ok(WorldDiff::default())
            }
            Verb::SetField => {
                let path = match spec.params.get("path") {
                    Some(Operand::Path(p)) => p.clone(),
                    _ => return fail("missing_path"),
                };
                let value = match spec.params.get("value") {
                    Some(Operand::Literal(lit)) => FieldValue::from_literal(lit),
                    _ => return fail("missing_value"),
                };
                // Walk to the owning instance of the terminal field.
                let mut instance_id = match bindings.get(&path.root) {
                    Some(i) => i.clone(),
                    None => return fail("unbound_target"),
                };
                for seg in &path.segments[..path.segments.len().saturating_sub(1)] {
                    let inst = match self.instances.get(&instance_id) {
                        Some(i) => i,
                        None => return fail("unknown_instance"),
                    };
                    match inst.fields.get(seg) {
                        Some(FieldValue::Ref(next)) => instance_id = next.clone(),
                        _ => return fail("bad_path"),
                    }
                }
                let field = match path.segments.last() {
                    Some(f) => f.clone(),
                    None => return fail("bad_path"),
                };
                if !self.instances.contains_key(&instance_id) {
                    return fail("unknown_instance");
                }
                let mut diff = WorldDiff::default();
                self.set_field(&instance_id, &field, value, &mut diff);
                ok(diff)
            }
            Verb::BlockCheckout => {
                let shopper = match bindings.get("Shopper") {
                    Some(s) => s.clone(),
                    None => return fail("unbound_target"),
                };
                ctx.blocked_checkouts.insert(shopper);
                ok(WorldDiff::default())
            }
        }
    }

    /// Referential-integrity and invariant check, run by tests after every
    /// iteration.
    pub fn check_integrity(&self) -> Result<(), WorldError> {
        for inst in self.instances.values() {
            for (field, value) in &inst.fields {
                match value {
                    FieldValue::Ref(target) => {
                        if !self.instances.contains_key(target) {
                            return Err(WorldError::Corrupt(
                                inst.id.clone(),
                                format!("dangling reference {field} -> {target}"),
                            ));
                        }
                    }
                    FieldValue::Set(ids) => {
                        for id in ids {
                            if !self.instances.contains_key(id) {
                                return Err(WorldError::Corrupt(
                                    inst.id.clone(),
                                    format!("dangling member {id} in {field}"),
                                ));
                            }
                        }
                    }
                    FieldValue::Int(n) if field == "stock" && *n < 0 => {
                        return Err(WorldError::NegativeStock {
                            item: inst.id.clone(),
                            stock: *n,
                        });
                    }
                    _ => {}
                }
            }
            if inst.ty == "Order" {
                let (items, size) = self.order_items(&inst.id)?;
                if items.len() as i64 != size {
                    return Err(WorldError::Corrupt(
                        inst.id.clone(),
                        format!("size {size} != {} items", items.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    /// One JSON object per instance plus one for the clock.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        let clock = serde_json::json!({"clock": {"day": self.clock.day.as_str(), "minutes": self.clock.minutes}});
        out.push_str(&clock.to_string());
        out.push('\n');
        for inst in self.instances.values() {
            out.push_str(&serde_json::to_string(inst).expect("instance serializes"));
            out.push('\n');
        }
        out
    }
}

/// Total ordering used by condition evaluation; enum values compare by
/// declaration index.
fn compare_values(
    bundle: &ModelBundle,
    lhs: &FieldValue,
    rhs: &FieldValue,
) -> Option<std::cmp::Ordering> {
    match (lhs, rhs) {
        (FieldValue::Int(a), FieldValue::Int(b)) => Some(a.cmp(b)),
        (FieldValue::Bool(a), FieldValue::Bool(b)) => Some(a.cmp(b)),
        (FieldValue::Text(a), FieldValue::Text(b)) => Some(a.cmp(b)),
        (FieldValue::Time(a), FieldValue::Time(b)) => Some(a.cmp(b)),
        (FieldValue::EnumValue(a), FieldValue::EnumValue(b)) => {
            // Find a declared enum containing both values.
            for ty in bundle.resources.values() {
                for kind in ty.fields.values() {
                    if let FieldKind::Enum(values) = kind {
                        if let (Some(i), Some(j)) = (
                            values.iter().position(|v| v == a),
                            values.iter().position(|v| v == b),
                        ) {
                            return Some(i.cmp(&j));
                        }
                    }
                }
            }
            Some(a.cmp(b))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::supermarket_bundle;

    fn seeded_world() -> WorldState {
        let mut w = WorldState::new();
        w.apply_event(&Event {
            time: Timestamp::new(Day::Mon, 8 * 60),
            kind: EventKind::StockChange {
                item: "it9".into(),
                stock: 10,
                fields: BTreeMap::new(),
            },
        })
        .unwrap();
        w.apply_event(&Event {
            time: Timestamp::new(Day::Mon, 8 * 60 + 30),
            kind: EventKind::EnterSystem {
                shopper: "sh1".into(),
                fields: BTreeMap::from([("age".to_string(), FieldValue::Int(40))]),
            },
        })
        .unwrap();
        w
    }

    fn add(w: &mut WorldState, shopper: &str, item: &str, minutes: u16) {
        w.apply_event(&Event {
            time: Timestamp::new(Day::Mon, minutes),
            kind: EventKind::AddItem {
                shopper: shopper.into(),
                item: item.into(),
            },
        })
        .unwrap();
    }

    #[test]
    fn add_item_grows_the_open_order() {
        let mut w = seeded_world();
        add(&mut w, "sh1", "it9", 9 * 60);
        let order = w.open_order_of("sh1").unwrap();
        assert_eq!(order.fields["size"], FieldValue::Int(1));
    }

    #[test]
    fn checkout_moves_stock_and_closes_order() {
        let mut w = seeded_world();
        for i in 0..3 {
            add(&mut w, "sh1", "it9", 9 * 60 + i);
        }
        w.finalize_checkout("sh1").unwrap();
        assert_eq!(w.instances["it9"].fields["stock"], FieldValue::Int(7));
        assert!(w.open_order_of("sh1").is_none());
        w.check_integrity().unwrap();
    }

    #[test]
    fn negative_stock_change_is_rejected() {
        let mut w = seeded_world();
        let err = w
            .apply_event(&Event {
                time: Timestamp::new(Day::Mon, 9 * 60),
                kind: EventKind::StockChange {
                    item: "it9".into(),
                    stock: -1,
                    fields: BTreeMap::new(),
                },
            })
            .unwrap_err();
        assert!(matches!(err, WorldError::NegativeStock { .. }));
    }

    #[test]
    fn remove_item_shrinks_order_by_one() {
        let bundle = supermarket_bundle();
        let mut w = seeded_world();
        add(&mut w, "sh1", "it9", 9 * 60);
        add(&mut w, "sh1", "it9", 9 * 60 + 1);
        let order_id = w.open_order_of("sh1").unwrap().id.clone();
        let spec = bundle.operations["OR1_1"].action.clone();
        let mut ctx = IterationCtx::default();
        let bindings = BTreeMap::from([
            ("Shopper".to_string(), "sh1".to_string()),
            ("Item".to_string(), "it9".to_string()),
            ("Order".to_string(), order_id.clone()),
        ]);
        let outcome = w.apply_action("OR1_1", &spec, &bindings, &mut ctx);
        assert!(outcome.applied());
        assert_eq!(w.instances[&order_id].fields["size"], FieldValue::Int(1));
    }

    #[test]
    fn second_redirect_fails_idempotently() {
        let bundle = supermarket_bundle();
        let mut w = seeded_world();
        let spec = bundle.operations["OR1_2"].action.clone();
        let mut ctx = IterationCtx::default();
        let bindings = BTreeMap::from([("Shopper".to_string(), "sh1".to_string())]);
        assert!(w.apply_action("OR1_2", &spec, &bindings, &mut ctx).applied());
        let second = w.apply_action("OR1_2", &spec, &bindings, &mut ctx);
        assert_eq!(
            second.status,
            ActionStatus::Failed("already_redirected".into())
        );
        assert!(second.diff.is_empty());
    }

    #[test]
    fn cap_basket_removes_newest_first() {
        let bundle = supermarket_bundle();
        let mut w = seeded_world();
        // 23 distinct items so removal order is observable.
        for i in 0..23u16 {
            let id = format!("x{i:02}");
            w.apply_event(&Event {
                time: Timestamp::new(Day::Mon, 9 * 60),
                kind: EventKind::StockChange {
                    item: id.clone(),
                    stock: 5,
                    fields: BTreeMap::new(),
                },
            })
            .unwrap();
            add(&mut w, "sh1", &id, 9 * 60 + i);
        }
        let order_id = w.open_order_of("sh1").unwrap().id.clone();
        let spec = bundle.operations["OR2_1"].action.clone();
        let mut ctx = IterationCtx::default();
        let bindings = BTreeMap::from([("Order".to_string(), order_id.clone())]);
        let outcome = w.apply_action("OR2_1", &spec, &bindings, &mut ctx);
        assert!(outcome.applied());
        assert_eq!(w.instances[&order_id].fields["size"], FieldValue::Int(20));
        let items = match &w.instances[&order_id].fields["items"] {
            FieldValue::Set(items) => items.clone(),
            _ => unreachable!(),
        };
        assert!(!items.contains(&"x22".to_string()));
        assert!(!items.contains(&"x21".to_string()));
        assert!(!items.contains(&"x20".to_string()));
        assert!(items.contains(&"x19".to_string()));
    }

    #[test]
    fn cap_basket_fails_when_everything_is_exempt() {
        let bundle = supermarket_bundle();
        let mut w = seeded_world();
        for i in 0..21u16 {
            add(&mut w, "sh1", "it9", 9 * 60 + i);
        }
        let order_id = w.open_order_of("sh1").unwrap().id.clone();
        let spec = bundle.operations["OR2_1"].action.clone();
        let mut ctx = IterationCtx::default();
        ctx.exempt_items.insert("it9".into());
        let bindings = BTreeMap::from([("Order".to_string(), order_id.clone())]);
        let outcome = w.apply_action("OR2_1", &spec, &bindings, &mut ctx);
        assert_eq!(outcome.status, ActionStatus::Failed("exempt".into()));
        assert_eq!(w.instances[&order_id].fields["size"], FieldValue::Int(21));
    }

    #[test]
    fn elder_window_rule_is_time_sensitive() {
        let bundle = supermarket_bundle();
        let mut w = seeded_world();
        let rule = &bundle.operations["OR1_1"].rule;
        let bindings = BTreeMap::from([("Shopper".to_string(), "sh1".to_string())]);
        w.clock = Timestamp::new(Day::Mon, 15 * 60);
        assert!(!w.eval_rule(&bundle, &bindings, rule).unwrap());
        w.clock = Timestamp::new(Day::Mon, 11 * 60);
        assert!(w.eval_rule(&bundle, &bindings, rule).unwrap());
        // Boundary: 13:00 is outside the strictly-open window.
        w.clock = Timestamp::new(Day::Mon, 13 * 60);
        assert!(!w.eval_rule(&bundle, &bindings, rule).unwrap());
        // Weekend is outside the working-day bound.
        w.clock = Timestamp::new(Day::Sat, 11 * 60);
        assert!(!w.eval_rule(&bundle, &bindings, rule).unwrap());
    }

    #[test]
    fn order_owner_age_resolves_through_reference() {
        let mut w = seeded_world();
        add(&mut w, "sh1", "it9", 9 * 60);
        let order_id = w.open_order_of("sh1").unwrap().id.clone();
        let bindings = BTreeMap::from([("Order".to_string(), order_id)]);
        let v = w
            .eval_path(&bindings, &FieldPath::new("Order", &["owner", "age"]))
            .unwrap();
        assert_eq!(v, FieldValue::Int(40));
    }
}
