//! The three knowledge models: stakeholders and the fairness requirement
//! forest, operational requirements with their policies, and resource type
//! schemas. Everything here is immutable after load; runtime changes
//! (requirement injection) build a new [`ModelBundle`] snapshot.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type StakeholderId = String;
pub type ResourceTypeName = String;
pub type FrId = String;
pub type OfrId = String;
pub type OperationId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StakeholderKind {
    Individual,
    Group,
    Organization,
    Authority,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stakeholder {
    pub id: StakeholderId,
    pub name: String,
    pub kind: StakeholderKind,
}

/// Scalar or structural kind of a resource field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Integer,
    Boolean,
    Text,
    Enum(Vec<String>),
    TimeOfDay,
    Reference(ResourceTypeName),
    SetOf(ResourceTypeName),
}

impl FieldKind {
    /// Kinds usable as the terminal of a comparison path.
    pub fn is_scalar(&self) -> bool {
        !matches!(self, FieldKind::Reference(_) | FieldKind::SetOf(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceType {
    pub name: ResourceTypeName,
    pub fields: BTreeMap<String, FieldKind>,
}

/// Dotted reference into the resource model, e.g. `Order.owner.age`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldPath {
    pub root: ResourceTypeName,
    pub segments: Vec<String>,
}

impl FieldPath {
    pub fn new(root: impl Into<String>, segments: &[&str]) -> Self {
        FieldPath {
            root: root.into(),
            segments: segments.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl std::fmt::Display for FieldPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.root)?;
        for s in &self.segments {
            write!(f, ".{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }
}

/// Literal values appearing in rules and action parameters. Time-of-day is
/// minutes since midnight, always in `[0, 1440)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Literal {
    Int(i64),
    Bool(bool),
    Text(String),
    EnumValue(String),
    Time(u16),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operand {
    Literal(Literal),
    Path(FieldPath),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub lhs: FieldPath,
    pub op: CmpOp,
    pub rhs: Operand,
}

/// A conjunction of conditions. Evaluation is total once every root type the
/// conditions mention is bound to an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
}

impl Rule {
    /// Resource types mentioned as path roots, i.e. the read set of the rule.
    pub fn root_types(&self) -> BTreeSet<ResourceTypeName> {
        let mut roots = BTreeSet::new();
        for c in &self.conditions {
            roots.insert(c.lhs.root.clone());
            if let Operand::Path(p) = &c.rhs {
                roots.insert(p.root.clone());
            }
        }
        roots
    }
}

/// Built-in action verbs understood by the shop simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    RemoveItem,
    RedirectOut,
    CapBasket,
    ExemptItem,
    SetField,
    BlockCheckout,
}

impl Verb {
    pub fn name(&self) -> &'static str {
        match self {
            Verb::RemoveItem => "remove_item",
            Verb::RedirectOut => "redirect_out",
            Verb::CapBasket => "cap_basket",
            Verb::ExemptItem => "exempt_item",
            Verb::SetField => "set_field",
            Verb::BlockCheckout => "block_checkout",
        }
    }

    pub fn parse(s: &str) -> Option<Verb> {
        Some(match s {
            "remove_item" => Verb::RemoveItem,
            "redirect_out" => Verb::RedirectOut,
            "cap_basket" => Verb::CapBasket,
            "exempt_item" => Verb::ExemptItem,
            "set_field" => Verb::SetField,
            "block_checkout" => Verb::BlockCheckout,
            _ => return None,
        })
    }

    /// Required parameter names, in the order the serializer emits them.
    pub fn required_params(&self) -> &'static [&'static str] {
        match self {
            Verb::CapBasket => &["limit"],
            Verb::SetField => &["path", "value"],
            _ => &[],
        }
    }

    /// Verbs that make the instance they target unusable for later actions
    /// in the same iteration. Execution ordering puts them last.
    pub fn invalidates_target(&self) -> bool {
        matches!(self, Verb::RemoveItem | Verb::RedirectOut)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpec {
    pub name: String,
    pub verb: Verb,
    pub params: BTreeMap<String, Operand>,
    pub reads: BTreeSet<ResourceTypeName>,
    pub writes: BTreeSet<ResourceTypeName>,
}

/// One rule plus the actions it triggers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub rule: Rule,
    pub actions: Vec<ActionSpec>,
}

/// The `(s, p, r)` leaf tuple: stakeholder specification, policy, and the
/// resource types the policy touches. `resources` is always the recomputed
/// union over the policy; a mismatch with a declared set is a load error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationalRequirement {
    pub id: OfrId,
    pub specified_by: StakeholderId,
    pub affects: BTreeSet<StakeholderId>,
    pub policy: Policy,
    pub resources: BTreeSet<ResourceTypeName>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decomposition {
    And,
    Or,
    Leaf,
}

pub const DEFAULT_PRIORITY: i32 = 10;

/// A node in the goal forest. Lower `priority` is more authoritative when
/// arbitrating conflicts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessRequirement {
    pub id: FrId,
    pub description: String,
    pub specified_by: StakeholderId,
    pub affects: BTreeSet<StakeholderId>,
    pub decomposition: Decomposition,
    /// Child requirement ids for AND/OR nodes, empty for leaves.
    pub children: Vec<FrId>,
    /// The operational requirement a leaf refines into.
    pub ofr: Option<OfrId>,
    pub priority: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Access {
    Read,
    Write,
}

/// One concrete (rule, action) realisation of an operational requirement.
/// Several operations per OFR are alternatives the planner chooses between.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    pub id: OperationId,
    pub ofr: OfrId,
    pub rule: Rule,
    pub action: ActionSpec,
    pub links: BTreeSet<(ResourceTypeName, Access)>,
}

impl Operation {
    /// Resource links implied by the rule (reads) and the action
    /// (reads/writes).
    pub fn derive_links(rule: &Rule, action: &ActionSpec) -> BTreeSet<(ResourceTypeName, Access)> {
        let mut links = BTreeSet::new();
        for t in rule.root_types() {
            links.insert((t, Access::Read));
        }
        for t in &action.reads {
            links.insert((t.clone(), Access::Read));
        }
        for t in &action.writes {
            links.insert((t.clone(), Access::Write));
        }
        links
    }

    pub fn write_set(&self) -> BTreeSet<ResourceTypeName> {
        self.links
            .iter()
            .filter(|(_, a)| *a == Access::Write)
            .map(|(t, _)| t.clone())
            .collect()
    }
}

/// Per-iteration satisfaction status of a goal node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Fulfilled,
    Violated,
    /// No rule under the node was bound or true this iteration.
    Idle,
    /// Violated, but attributable to a higher-priority conflicting
    /// requirement being fulfilled; suppresses remediation.
    ConflictExplained,
}

/// The three models as one loadable, validated unit.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub stakeholders: BTreeMap<StakeholderId, Stakeholder>,
    pub resources: BTreeMap<ResourceTypeName, ResourceType>,
    pub requirements: BTreeMap<FrId, FairnessRequirement>,
    pub ofrs: BTreeMap<OfrId, OperationalRequirement>,
    pub operations: BTreeMap<OperationId, Operation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown resource type `{0}`")]
    UnknownType(String),
    #[error("resource type `{ty}` has no field `{field}`")]
    UnknownField { ty: String, field: String },
    #[error("path `{0}` ends on a non-scalar field")]
    NonScalarTerminal(String),
    #[error("unknown stakeholder `{0}`")]
    UnknownStakeholder(String),
    #[error("unknown requirement `{0}`")]
    UnknownRequirement(String),
    #[error("unknown operational requirement `{0}`")]
    UnknownOfr(String),
    #[error("stakeholder `{0}` has an empty name")]
    EmptyStakeholderName(String),
    #[error("requirement `{0}` appears under more than one parent or in a cycle")]
    NotAForest(String),
    #[error("requirement `{0}` decomposes into no children")]
    EmptyDecomposition(String),
    #[error("leaf requirement `{0}` does not reference an operational requirement")]
    LeafWithoutOfr(String),
    #[error("operational requirement `{0}` has no operation")]
    DanglingLeaf(String),
    #[error("rule of operation `{0}` is empty")]
    EmptyRule(String),
    #[error("operation `{op}` declares links that differ from its rule and action ({detail})")]
    LinkMismatch { op: String, detail: String },
    #[error("operational requirement `{ofr}` declares resources {declared:?} but its policy uses {actual:?}")]
    ResourceSetMismatch {
        ofr: String,
        declared: Vec<String>,
        actual: Vec<String>,
    },
    #[error("action `{action}`: verb {verb} requires parameter `{param}`")]
    MissingParam {
        action: String,
        verb: String,
        param: String,
    },
    #[error("condition `{0}` compares incompatible kinds")]
    IncomparableKinds(String),
    #[error("time literal {0} is out of range (minutes must be below 1440)")]
    TimeOutOfRange(u16),
    #[error("field `{field}` of `{ty}` shadows a resource type name")]
    FieldShadowsType { ty: String, field: String },
}

impl ModelBundle {
    /// Checks every load invariant and returns the full list of violations.
    /// An empty list means the bundle is well-formed.
    pub fn validate(&self) -> Vec<ModelError> {
        let mut errs = Vec::new();
        self.check_stakeholders(&mut errs);
        self.check_resources(&mut errs);
        self.check_forest(&mut errs);
        self.check_operations(&mut errs);
        self.check_ofrs(&mut errs);
        errs
    }

    fn check_stakeholders(&self, errs: &mut Vec<ModelError>) {
        for s in self.stakeholders.values() {
            if s.name.trim().is_empty() {
                errs.push(ModelError::EmptyStakeholderName(s.id.clone()));
            }
        }
    }

    fn check_resources(&self, errs: &mut Vec<ModelError>) {
        for ty in self.resources.values() {
            for (fname, fkind) in &ty.fields {
                if self.resources.contains_key(fname) {
                    errs.push(ModelError::FieldShadowsType {
                        ty: ty.name.clone(),
                        field: fname.clone(),
                    });
                }
                match fkind {
                    FieldKind::Reference(t) | FieldKind::SetOf(t) => {
                        if !self.resources.contains_key(t) {
                            errs.push(ModelError::UnknownType(t.clone()));
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    fn check_forest(&self, errs: &mut Vec<ModelError>) {
        let mut parent: BTreeMap<&str, &str> = BTreeMap::new();
        for fr in self.requirements.values() {
            if !self.stakeholders.contains_key(&fr.specified_by) {
                errs.push(ModelError::UnknownStakeholder(fr.specified_by.clone()));
            }
            for s in &fr.affects {
                if !self.stakeholders.contains_key(s) {
                    errs.push(ModelError::UnknownStakeholder(s.clone()));
                }
            }
            match fr.decomposition {
                Decomposition::Leaf => match &fr.ofr {
                    None => errs.push(ModelError::LeafWithoutOfr(fr.id.clone())),
                    Some(ofr) => {
                        if !self.ofrs.contains_key(ofr) {
                            errs.push(ModelError::UnknownOfr(ofr.clone()));
                        }
                    }
                },
                Decomposition::And | Decomposition::Or => {
                    if fr.children.is_empty() {
                        errs.push(ModelError::EmptyDecomposition(fr.id.clone()));
                    }
                    for child in &fr.children {
                        if !self.requirements.contains_key(child) {
                            errs.push(ModelError::UnknownRequirement(child.clone()));
                            continue;
                        }
                        if parent.insert(child.as_str(), fr.id.as_str()).is_some() {
                            errs.push(ModelError::NotAForest(child.clone()));
                        }
                    }
                }
            }
        }
        // A node reachable back to itself through parent links is a cycle.
        for fr in self.requirements.keys() {
            let mut seen = BTreeSet::new();
            let mut cur = fr.as_str();
            while let Some(p) = parent.get(cur) {
                if !seen.insert(*p) {
                    errs.push(ModelError::NotAForest(fr.clone()));
                    break;
                }
                cur = p;
            }
        }
    }

    fn check_operations(&self, errs: &mut Vec<ModelError>) {
        for op in self.operations.values() {
            if !self.ofrs.contains_key(&op.ofr) {
                errs.push(ModelError::UnknownOfr(op.ofr.clone()));
            }
            if op.rule.conditions.is_empty() {
                errs.push(ModelError::EmptyRule(op.id.clone()));
            }
            for cond in &op.rule.conditions {
                self.check_condition(cond, errs);
            }
            self.check_action(&op.action, errs);
            let derived = Operation::derive_links(&op.rule, &op.action);
            if derived != op.links {
                let missing: Vec<_> = derived.difference(&op.links).collect();
                let extra: Vec<_> = op.links.difference(&derived).collect();
                errs.push(ModelError::LinkMismatch {
                    op: op.id.clone(),
                    detail: format!("missing {missing:?}, extra {extra:?}"),
                });
            }
        }
    }

    fn check_action(&self, action: &ActionSpec, errs: &mut Vec<ModelError>) {
        for param in action.verb.required_params() {
            if !action.params.contains_key(*param) {
                errs.push(ModelError::MissingParam {
                    action: action.name.clone(),
                    verb: action.verb.name().to_string(),
                    param: param.to_string(),
                });
            }
        }
        for ty in action.reads.iter().chain(action.writes.iter()) {
            if !self.resources.contains_key(ty) {
                errs.push(ModelError::UnknownType(ty.clone()));
            }
        }
        for operand in action.params.values() {
            if let Operand::Path(p) = operand {
                if let Err(e) = self.resolve_path(p) {
                    errs.push(e);
                }
            }
        }
    }

    fn check_condition(&self, cond: &Condition, errs: &mut Vec<ModelError>) {
        let lhs_kind = match self.resolve_path(&cond.lhs) {
            Ok(k) => k,
            Err(e) => {
                errs.push(e);
                return;
            }
        };
        match &cond.rhs {
            Operand::Path(p) => match self.resolve_path(p) {
                Ok(rhs_kind) => {
                    if !kinds_comparable(&lhs_kind, &rhs_kind) {
                        errs.push(ModelError::IncomparableKinds(format!(
                            "{} {} {}",
                            cond.lhs,
                            cond.op.symbol(),
                            p
                        )));
                    }
                }
                Err(e) => errs.push(e),
            },
            Operand::Literal(lit) => {
                if let Literal::Time(m) = lit {
                    if *m >= 24 * 60 {
                        errs.push(ModelError::TimeOutOfRange(*m));
                    }
                }
                if !literal_matches_kind(lit, &lhs_kind) {
                    errs.push(ModelError::IncomparableKinds(format!(
                        "{} {} {:?}",
                        cond.lhs,
                        cond.op.symbol(),
                        lit
                    )));
                }
            }
        }
    }

    fn check_ofrs(&self, errs: &mut Vec<ModelError>) {
        let mut ops_by_ofr: BTreeMap<&str, Vec<&Operation>> = BTreeMap::new();
        for op in self.operations.values() {
            ops_by_ofr.entry(op.ofr.as_str()).or_default().push(op);
        }
        for ofr in self.ofrs.values() {
            if !self.stakeholders.contains_key(&ofr.specified_by) {
                errs.push(ModelError::UnknownStakeholder(ofr.specified_by.clone()));
            }
            if !ops_by_ofr.contains_key(ofr.id.as_str()) {
                errs.push(ModelError::DanglingLeaf(ofr.id.clone()));
            }
            let actual = self.recompute_ofr_resources(&ofr.id);
            if actual != ofr.resources {
                errs.push(ModelError::ResourceSetMismatch {
                    ofr: ofr.id.clone(),
                    declared: ofr.resources.iter().cloned().collect(),
                    actual: actual.into_iter().collect(),
                });
            }
        }
    }

    /// Resolves a dotted path to the kind of its terminal field, following
    /// reference fields through the schema.
    pub fn resolve_path(&self, path: &FieldPath) -> Result<FieldKind, ModelError> {
        let mut ty = self
            .resources
            .get(&path.root)
            .ok_or_else(|| ModelError::UnknownType(path.root.clone()))?;
        if path.segments.is_empty() {
            return Err(ModelError::NonScalarTerminal(path.to_string()));
        }
        let mut kind: Option<&FieldKind> = None;
        for (i, seg) in path.segments.iter().enumerate() {
            if i > 0 {
                // The previous segment must have been a reference to descend.
                match kind {
                    Some(FieldKind::Reference(next)) => {
                        ty = self
                            .resources
                            .get(next)
                            .ok_or_else(|| ModelError::UnknownType(next.clone()))?;
                    }
                    _ => {
                        return Err(ModelError::UnknownField {
                            ty: format!("{:?}", kind.unwrap()),
                            field: seg.clone(),
                        })
                    }
                }
            }
            kind = Some(ty.fields.get(seg).ok_or_else(|| ModelError::UnknownField {
                ty: ty.name.clone(),
                field: seg.clone(),
            })?);
        }
        let kind = kind.unwrap();
        if !kind.is_scalar() {
            return Err(ModelError::NonScalarTerminal(path.to_string()));
        }
        Ok(kind.clone())
    }

    /// Union of resource types referenced by the OFR's policy rule paths and
    /// its actions' read/write declarations.
    pub fn recompute_ofr_resources(&self, ofr: &str) -> BTreeSet<ResourceTypeName> {
        let mut out = BTreeSet::new();
        for op in self.operations.values().filter(|o| o.ofr == ofr) {
            out.extend(op.rule.root_types());
            out.extend(op.action.reads.iter().cloned());
            out.extend(op.action.writes.iter().cloned());
        }
        out
    }

    /// Operations owned by the given OFR, in id order.
    pub fn operations_of_ofr(&self, ofr: &str) -> Vec<&Operation> {
        self.operations.values().filter(|o| o.ofr == ofr).collect()
    }

    /// Root requirements (nodes with no parent), in id order.
    pub fn roots(&self) -> Vec<&FairnessRequirement> {
        let children: BTreeSet<&str> = self
            .requirements
            .values()
            .flat_map(|fr| fr.children.iter().map(String::as_str))
            .collect();
        self.requirements
            .values()
            .filter(|fr| !children.contains(fr.id.as_str()))
            .collect()
    }

    /// Parent map over the requirement forest.
    pub fn parents(&self) -> BTreeMap<&str, &str> {
        let mut out = BTreeMap::new();
        for fr in self.requirements.values() {
            for child in &fr.children {
                out.insert(child.as_str(), fr.id.as_str());
            }
        }
        out
    }

    /// Leaf requirement node owning the given OFR, if any.
    pub fn leaf_of_ofr(&self, ofr: &str) -> Option<&FairnessRequirement> {
        self.requirements
            .values()
            .find(|fr| fr.ofr.as_deref() == Some(ofr))
    }

    /// Merges another bundle's declarations into a new snapshot. Later
    /// declarations win on id collision; the caller re-validates.
    pub fn merged_with(&self, other: &ModelBundle) -> ModelBundle {
        let mut out = self.clone();
        out.stakeholders
            .extend(other.stakeholders.iter().map(|(k, v)| (k.clone(), v.clone())));
        out.resources
            .extend(other.resources.iter().map(|(k, v)| (k.clone(), v.clone())));
        out.requirements
            .extend(other.requirements.iter().map(|(k, v)| (k.clone(), v.clone())));
        out.ofrs
            .extend(other.ofrs.iter().map(|(k, v)| (k.clone(), v.clone())));
        out.operations
            .extend(other.operations.iter().map(|(k, v)| (k.clone(), v.clone())));
        out
    }

    /// Removes a root requirement together with its subtree, OFRs, and
    /// operations, producing a new snapshot.
    pub fn without_requirement(&self, root: &str) -> ModelBundle {
        let mut doomed_frs = BTreeSet::new();
        let mut stack = vec![root.to_string()];
        while let Some(id) = stack.pop() {
            if let Some(fr) = self.requirements.get(&id) {
                stack.extend(fr.children.iter().cloned());
            }
            doomed_frs.insert(id);
        }
        let doomed_ofrs: BTreeSet<&str> = self
            .requirements
            .values()
            .filter(|fr| doomed_frs.contains(&fr.id))
            .filter_map(|fr| fr.ofr.as_deref())
            .collect();
        let mut out = self.clone();
        out.requirements.retain(|id, _| !doomed_frs.contains(id));
        out.ofrs.retain(|id, _| !doomed_ofrs.contains(id.as_str()));
        out.operations
            .retain(|_, op| !doomed_ofrs.contains(op.ofr.as_str()));
        out
    }
}

fn kinds_comparable(a: &FieldKind, b: &FieldKind) -> bool {
    use FieldKind::*;
    matches!(
        (a, b),
        (Integer, Integer) | (Boolean, Boolean) | (Text, Text) | (TimeOfDay, TimeOfDay)
    ) || matches!((a, b), (Enum(x), Enum(y)) if x == y)
}

fn literal_matches_kind(lit: &Literal, kind: &FieldKind) -> bool {
    match (lit, kind) {
        (Literal::Int(_), FieldKind::Integer) => true,
        (Literal::Bool(_), FieldKind::Boolean) => true,
        (Literal::Text(_), FieldKind::Text) => true,
        (Literal::Time(_), FieldKind::TimeOfDay) => true,
        (Literal::EnumValue(v), FieldKind::Enum(values)) => values.contains(v),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::supermarket_bundle;

    #[test]
    fn supermarket_bundle_is_well_formed() {
        let bundle = supermarket_bundle();
        let errs = bundle.validate();
        assert!(errs.is_empty(), "unexpected errors: {errs:?}");
    }

    #[test]
    fn resolve_path_through_reference() {
        let bundle = supermarket_bundle();
        let kind = bundle
            .resolve_path(&FieldPath::new("Order", &["owner", "age"]))
            .unwrap();
        assert_eq!(kind, FieldKind::Integer);
    }

    #[test]
    fn resolve_path_direct_scalar() {
        let bundle = supermarket_bundle();
        let kind = bundle
            .resolve_path(&FieldPath::new("Shopper", &["age"]))
            .unwrap();
        assert_eq!(kind, FieldKind::Integer);
    }

    #[test]
    fn resolve_path_rejects_descent_into_scalar() {
        let bundle = supermarket_bundle();
        let err = bundle
            .resolve_path(&FieldPath::new("Shopper", &["age", "age"]))
            .unwrap_err();
        assert!(matches!(err, ModelError::UnknownField { .. }));
    }

    #[test]
    fn resolve_path_rejects_unknown_type() {
        let bundle = supermarket_bundle();
        let err = bundle
            .resolve_path(&FieldPath::new("Shoper", &["age"]))
            .unwrap_err();
        assert_eq!(err, ModelError::UnknownType("Shoper".into()));
    }

    #[test]
    fn ofr_resource_mismatch_is_rejected() {
        let mut bundle = supermarket_bundle();
        bundle
            .ofrs
            .get_mut("OFR1_1")
            .unwrap()
            .resources
            .insert("Item".into());
        assert!(bundle
            .validate()
            .iter()
            .any(|e| matches!(e, ModelError::ResourceSetMismatch { .. })));
    }

    #[test]
    fn shared_child_is_not_a_forest() {
        let mut bundle = supermarket_bundle();
        // FR2 adopts FR1's first child as well.
        let fr2 = bundle.requirements.get_mut("FR2").unwrap();
        fr2.decomposition = Decomposition::And;
        fr2.ofr = None;
        fr2.children = vec!["FR1_1".into()];
        assert!(bundle
            .validate()
            .iter()
            .any(|e| matches!(e, ModelError::NotAForest(_))));
    }

    #[test]
    fn retire_drops_subtree_and_operations() {
        let bundle = supermarket_bundle().without_requirement("FR1");
        assert!(!bundle.requirements.contains_key("FR1"));
        assert!(!bundle.requirements.contains_key("FR1_1"));
        assert!(!bundle.ofrs.contains_key("OFR1_1"));
        assert!(!bundle.operations.contains_key("OR1_1"));
        assert!(bundle.validate().is_empty());
    }
}
