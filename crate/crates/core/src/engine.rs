//! The adaptation loop. Monitor evaluates operation rules against world
//! events, Analyse derives satisfaction statuses and conflict edges, Plan
//! picks the least-conflicting operationalisation, Execute orders and
//! deduplicates actions. The model bundle is the shared knowledge and is
//! replaced wholesale when a requirement is injected or retired at runtime.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::model::{
    FrId, ModelBundle, NodeStatus, OfrId, Operation, OperationId, ResourceTypeName, StakeholderId,
    Verb,
};
use crate::query::{self, propagate_satisfaction, resources_of, QueryError, Relation};
use crate::trace::TraceRecord;
use crate::world::{
    ActionOutcome, Event, EventKind, IterationCtx, Timestamp, WorldState,
};

/// One rule evaluated under one event's bindings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleEvaluation {
    pub operation: OperationId,
    /// Iteration index of the triggering event.
    pub event: usize,
    pub time: Timestamp,
    pub result: bool,
    pub bindings: BTreeMap<ResourceTypeName, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Likely,
    /// The two requirements contribute to the same goal; resource overlap
    /// between them is expected rather than adversarial.
    Discounted,
}

/// Potential interference between two requirements through shared resources.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConflictEdge {
    pub fr_a: FrId,
    pub fr_b: FrId,
    pub shared: BTreeSet<ResourceTypeName>,
    pub stakeholder_overlap: BTreeSet<StakeholderId>,
    pub severity: Severity,
    /// (operation of `fr_a`, operation of `fr_b`, resource) triples that
    /// witness the overlap.
    pub evidence: Vec<(OperationId, OperationId, ResourceTypeName)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedCandidate {
    pub operation: OperationId,
    pub score: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub target: FrId,
    pub chosen: Vec<OperationId>,
    pub rejected: Vec<RejectedCandidate>,
    pub scores: BTreeMap<OperationId, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedAction {
    pub operation: OperationId,
    pub bindings: BTreeMap<ResourceTypeName, String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("leaf `{0}` has no candidate operation")]
    NoOperationalisation(String),
    #[error(transparent)]
    Query(#[from] QueryError),
}

/// Output of one Analyse pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisOutcome {
    /// Status per requirement node, with violations relabelled to
    /// `ConflictExplained` where a likely conflict accounts for them.
    pub statuses: BTreeMap<FrId, NodeStatus>,
    /// Last non-idle status per node, carried across iterations; this is
    /// what planning treats as "currently satisfied".
    pub effective: BTreeMap<FrId, NodeStatus>,
    /// Edges whose both endpoints were active (non-idle) this pass.
    pub conflicts: Vec<ConflictEdge>,
    /// Violated roots that still need a remediation plan.
    pub targets: Vec<FrId>,
}

/// Carried across iterations: the effective statuses form the engine's
/// memory of which requirements are currently satisfied.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineState {
    pub effective: BTreeMap<FrId, NodeStatus>,
    pub iteration: usize,
}

/// Evaluates every operation whose rule's root types the event can bind.
/// The clock binds implicitly; a checkout binds each distinct item of the
/// open order in turn for item-rooted rules. Operations the event cannot
/// bind are skipped.
pub fn monitor(
    iteration: usize,
    event: &Event,
    world: &WorldState,
    bundle: &ModelBundle,
) -> (Vec<RuleEvaluation>, Vec<String>) {
    let mut evaluations = Vec::new();
    let mut errors = Vec::new();

    let mut base: BTreeMap<ResourceTypeName, String> = BTreeMap::new();
    let mut checkout_items: Vec<String> = Vec::new();
    match &event.kind {
        EventKind::EnterSystem { shopper, .. } => {
            base.insert("Shopper".into(), shopper.clone());
        }
        EventKind::AddItem { shopper, item } | EventKind::RemoveItem { shopper, item } => {
            base.insert("Shopper".into(), shopper.clone());
            base.insert("Item".into(), item.clone());
            if let Some(order) = world.open_order_of(shopper) {
                base.insert("Order".into(), order.id.clone());
            }
        }
        EventKind::Checkout { shopper } => {
            base.insert("Shopper".into(), shopper.clone());
            if let Some(order) = world.open_order_of(shopper) {
                base.insert("Order".into(), order.id.clone());
                if let Some(crate::world::FieldValue::Set(items)) = order.fields.get("items") {
                    for item in items {
                        if !checkout_items.contains(item) {
                            checkout_items.push(item.clone());
                        }
                    }
                }
            }
        }
        EventKind::StockChange { item, .. } => {
            base.insert("Item".into(), item.clone());
        }
        EventKind::InjectRequirement { .. } | EventKind::RetireRequirement { .. } => {
            return (evaluations, errors);
        }
    }

    for op in bundle.operations.values() {
        let mut roots = op.rule.root_types();
        roots.remove("Clock");
        let unbound: Vec<&String> = roots.iter().filter(|r| !base.contains_key(*r)).collect();
        let binding_sets: Vec<BTreeMap<ResourceTypeName, String>> = if unbound.is_empty() {
            vec![base.clone()]
        } else if unbound.len() == 1
            && *unbound[0] == "Item"
            && matches!(event.kind, EventKind::Checkout { .. })
        {
            checkout_items
                .iter()
                .map(|item| {
                    let mut b = base.clone();
                    b.insert("Item".into(), item.clone());
                    b
                })
                .collect()
        } else {
            continue;
        };
        for bindings in binding_sets {
            match world.eval_rule(bundle, &bindings, &op.rule) {
                Ok(result) => evaluations.push(RuleEvaluation {
                    operation: op.id.clone(),
                    event: iteration,
                    time: event.time,
                    result,
                    bindings,
                }),
                Err(e) => errors.push(format!("{}: {e}", op.id)),
            }
        }
    }
    (evaluations, errors)
}

/// Operations reachable from a requirement's subtree, in id order.
fn operations_under<'a>(fr: &str, bundle: &'a ModelBundle) -> Vec<&'a Operation> {
    let mut ofrs: BTreeSet<&str> = BTreeSet::new();
    let mut stack = vec![fr];
    while let Some(id) = stack.pop() {
        if let Some(node) = bundle.requirements.get(id) {
            if let Some(ofr) = node.ofr.as_deref() {
                ofrs.insert(ofr);
            }
            stack.extend(node.children.iter().map(String::as_str));
        }
    }
    bundle
        .operations
        .values()
        .filter(|op| ofrs.contains(op.ofr.as_str()))
        .collect()
}

fn edge_between(
    f: &str,
    g: &str,
    bundle: &ModelBundle,
    resources: &BTreeMap<FrId, BTreeMap<ResourceTypeName, crate::model::Access>>,
) -> Result<Option<ConflictEdge>, QueryError> {
    use crate::model::Access;
    let rf = &resources[f];
    let rg = &resources[g];
    let mut shared = BTreeSet::new();
    for (ty, access) in rf {
        if *access == Access::Write && rg.contains_key(ty) {
            shared.insert(ty.clone());
        }
    }
    for (ty, access) in rg {
        if *access == Access::Write && rf.contains_key(ty) {
            shared.insert(ty.clone());
        }
    }
    if shared.is_empty() {
        return Ok(None);
    }
    let rel = query::relation(f, g, bundle)?;
    let severity = if matches!(rel, Relation::SameBranch | Relation::DivergesAtAnd) {
        Severity::Discounted
    } else {
        Severity::Likely
    };
    let mut evidence = Vec::new();
    for op_f in operations_under(f, bundle) {
        for op_g in operations_under(g, bundle) {
            for ty in &shared {
                let fw = op_f.write_set().contains(ty);
                let gw = op_g.write_set().contains(ty);
                let ft = op_f.links.iter().any(|(t, _)| t == ty);
                let gt = op_g.links.iter().any(|(t, _)| t == ty);
                if (fw && gt) || (gw && ft) {
                    evidence.push((op_f.id.clone(), op_g.id.clone(), ty.clone()));
                }
            }
        }
    }
    Ok(Some(ConflictEdge {
        fr_a: f.to_string(),
        fr_b: g.to_string(),
        shared,
        stakeholder_overlap: query::affected_overlap(f, g, bundle)?,
        severity,
        evidence,
    }))
}

/// Pairwise shared-resource scan over every pair of requirement nodes. An
/// edge exists whenever one side's write set intersects the other side's
/// read-or-write set. With the `parallel` feature the scan runs on rayon;
/// the output order is identical either way.
pub fn detect_conflicts(bundle: &ModelBundle) -> Result<Vec<ConflictEdge>, QueryError> {
    let frs: Vec<&FrId> = bundle.requirements.keys().collect();
    let mut resources = BTreeMap::new();
    for fr in &frs {
        resources.insert((*fr).clone(), resources_of(fr, bundle)?);
    }
    let pairs: Vec<(usize, usize)> = (0..frs.len())
        .flat_map(|i| ((i + 1)..frs.len()).map(move |j| (i, j)))
        .collect();

    #[cfg(feature = "parallel")]
    let results: Result<Vec<Option<ConflictEdge>>, QueryError> = pairs
        .par_iter()
        .map(|(i, j)| edge_between(frs[*i], frs[*j], bundle, &resources))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<Option<ConflictEdge>>, QueryError> = pairs
        .iter()
        .map(|(i, j)| edge_between(frs[*i], frs[*j], bundle, &resources))
        .collect();

    Ok(results?.into_iter().flatten().collect())
}

/// Always-sequential variant, kept as the baseline for benchmarks.
pub fn detect_conflicts_seq(bundle: &ModelBundle) -> Result<Vec<ConflictEdge>, QueryError> {
    let frs: Vec<&FrId> = bundle.requirements.keys().collect();
    let mut resources = BTreeMap::new();
    for fr in &frs {
        resources.insert((*fr).clone(), resources_of(fr, bundle)?);
    }
    let mut out = Vec::new();
    for i in 0..frs.len() {
        for j in (i + 1)..frs.len() {
            if let Some(edge) = edge_between(frs[i], frs[j], bundle, &resources)? {
                out.push(edge);
            }
        }
    }
    Ok(out)
}

fn root_of<'a>(fr: &str, bundle: &'a ModelBundle) -> &'a str {
    let parents = bundle.parents();
    let mut cur = fr;
    while let Some(p) = parents.get(cur) {
        cur = p;
    }
    bundle.requirements[cur].id.as_str()
}

/// Derives per-node statuses from this iteration's evaluations and executed
/// actions, relabels explained conflicts, and lists remediation targets.
///
/// A leaf is violated when some owning operation's rule was true but no
/// action of a true-rule operation was applied, fulfilled when one was, and
/// idle when no rule was bound or true. A violated node becomes
/// conflict-explained when a likely edge connects it to a requirement
/// fulfilled this same iteration with equal or higher authority.
pub fn analyse(
    evaluations: &[RuleEvaluation],
    executed: &[ActionOutcome],
    bundle: &ModelBundle,
    prior_effective: &BTreeMap<FrId, NodeStatus>,
) -> Result<AnalysisOutcome, QueryError> {
    let applied_ops: BTreeSet<&str> = executed
        .iter()
        .filter(|o| o.applied())
        .map(|o| o.operation.as_str())
        .collect();

    let mut leaf_statuses: BTreeMap<OfrId, NodeStatus> = BTreeMap::new();
    for ofr in bundle.ofrs.keys() {
        let ops = bundle.operations_of_ofr(ofr);
        let true_ops: Vec<&str> = ops
            .iter()
            .filter(|op| {
                evaluations
                    .iter()
                    .any(|ev| ev.operation == op.id && ev.result)
            })
            .map(|op| op.id.as_str())
            .collect();
        let status = if true_ops.is_empty() {
            NodeStatus::Idle
        } else if true_ops.iter().any(|op| applied_ops.contains(op)) {
            NodeStatus::Fulfilled
        } else {
            NodeStatus::Violated
        };
        leaf_statuses.insert(ofr.clone(), status);
    }

    let mut statuses = propagate_satisfaction(bundle, &leaf_statuses);
    let edges = detect_conflicts(bundle)?;

    // Only a fulfilment from this very iteration explains away a violation:
    // the blocking action must have actually run against the violated one.
    let pre_relabel = statuses.clone();
    for (fr, status) in statuses.iter_mut() {
        if *status != NodeStatus::Violated {
            continue;
        }
        let my_priority = bundle.requirements[fr].priority;
        let explained = edges.iter().any(|edge| {
            if edge.severity != Severity::Likely {
                return false;
            }
            let other = if edge.fr_a == *fr {
                Some(&edge.fr_b)
            } else if edge.fr_b == *fr {
                Some(&edge.fr_a)
            } else {
                None
            };
            match other {
                Some(g) => {
                    pre_relabel.get(g) == Some(&NodeStatus::Fulfilled)
                        && bundle.requirements[g].priority <= my_priority
                }
                None => false,
            }
        });
        if explained {
            *status = NodeStatus::ConflictExplained;
        }
    }

    let mut effective = prior_effective.clone();
    for (fr, status) in &statuses {
        if *status != NodeStatus::Idle {
            effective.insert(fr.clone(), *status);
        }
    }
    // Drop carried statuses of requirements no longer in the bundle.
    effective.retain(|fr, _| bundle.requirements.contains_key(fr));

    let conflicts = edges
        .into_iter()
        .filter(|e| {
            statuses.get(&e.fr_a).map(|s| *s != NodeStatus::Idle) == Some(true)
                && statuses.get(&e.fr_b).map(|s| *s != NodeStatus::Idle) == Some(true)
        })
        .collect();

    let roots: BTreeSet<&str> = bundle.roots().iter().map(|fr| fr.id.as_str()).collect();
    let targets = statuses
        .iter()
        .filter(|(fr, s)| roots.contains(fr.as_str()) && **s == NodeStatus::Violated)
        .map(|(fr, _)| fr.clone())
        .collect();

    Ok(AnalysisOutcome {
        statuses,
        effective,
        conflicts,
        targets,
    })
}

/// Chooses one operation per choice point in the target's subtree,
/// minimising the number of effectively-fulfilled requirements on other
/// branches whose resources the operation would write.
pub fn plan(
    target: &str,
    effective: &BTreeMap<FrId, NodeStatus>,
    bundle: &ModelBundle,
) -> Result<Plan, PlanError> {
    if !bundle.requirements.contains_key(target) {
        return Err(QueryError::UnknownNode(target.to_string()).into());
    }
    // Fulfilled requirements on diverging branches, with their resources.
    let mut at_risk: Vec<(FrId, BTreeSet<ResourceTypeName>)> = Vec::new();
    for (fr, status) in effective {
        if *status != NodeStatus::Fulfilled || !bundle.requirements.contains_key(fr) {
            continue;
        }
        let rel = query::relation(target, fr, bundle)?;
        if matches!(rel, Relation::DivergesAtOr | Relation::Unrelated) {
            let resources = resources_of(fr, bundle)?.into_keys().collect();
            at_risk.push((fr.clone(), resources));
        }
    }
    let score_of = |op: &Operation| -> usize {
        let writes = op.write_set();
        at_risk
            .iter()
            .filter(|(_, resources)| writes.iter().any(|w| resources.contains(w)))
            .count()
    };

    let mut plan = Plan {
        target: target.to_string(),
        chosen: vec![],
        rejected: vec![],
        scores: BTreeMap::new(),
    };
    plan_subtree(target, bundle, &score_of, &mut plan)?;
    Ok(plan)
}

/// Returns the summed score of the chosen operations in this subtree.
fn plan_subtree(
    fr: &str,
    bundle: &ModelBundle,
    score_of: &dyn Fn(&Operation) -> usize,
    plan: &mut Plan,
) -> Result<usize, PlanError> {
    let node = &bundle.requirements[fr];
    match node.decomposition {
        crate::model::Decomposition::Leaf => {
            let ofr = node
                .ofr
                .as_deref()
                .ok_or_else(|| PlanError::NoOperationalisation(fr.to_string()))?;
            let candidates = bundle.operations_of_ofr(ofr);
            if candidates.is_empty() {
                return Err(PlanError::NoOperationalisation(ofr.to_string()));
            }
            let mut scored: Vec<(usize, usize, &Operation)> = candidates
                .iter()
                .map(|op| (score_of(op), op.write_set().len(), *op))
                .collect();
            // Argmin with ties broken by fewer writes, then smaller id.
            scored.sort_by(|a, b| {
                a.0.cmp(&b.0)
                    .then(a.1.cmp(&b.1))
                    .then(a.2.id.cmp(&b.2.id))
            });
            let (best_score, _, best) = scored[0];
            for (score, _, op) in &scored {
                plan.scores.insert(op.id.clone(), *score);
            }
            for (score, _, op) in scored.iter().skip(1) {
                plan.rejected.push(RejectedCandidate {
                    operation: op.id.clone(),
                    score: *score,
                    reason: if *score > best_score {
                        "higher_score".into()
                    } else {
                        "tie_break".into()
                    },
                });
            }
            debug_assert!(scored.iter().all(|(s, _, _)| best_score <= *s));
            plan.chosen.push(best.id.clone());
            Ok(best_score)
        }
        crate::model::Decomposition::And => {
            let mut total = 0;
            for child in &node.children {
                total += plan_subtree(child, bundle, score_of, plan)?;
            }
            Ok(total)
        }
        crate::model::Decomposition::Or => {
            // Evaluate each branch in a scratch plan, commit the cheapest.
            let mut branches: Vec<(usize, &FrId, Plan)> = Vec::new();
            for child in &node.children {
                let mut scratch = Plan {
                    target: plan.target.clone(),
                    chosen: vec![],
                    rejected: vec![],
                    scores: BTreeMap::new(),
                };
                let score = plan_subtree(child, bundle, score_of, &mut scratch)?;
                branches.push((score, child, scratch));
            }
            branches.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));
            let (best_score, _, best) = branches.remove(0);
            plan.chosen.extend(best.chosen);
            plan.rejected.extend(best.rejected);
            plan.scores.extend(best.scores);
            for (score, _, scratch) in branches {
                plan.scores.extend(scratch.scores.clone());
                for op in scratch.chosen {
                    plan.rejected.push(RejectedCandidate {
                        operation: op,
                        score,
                        reason: "or_branch_not_chosen".into(),
                    });
                }
                plan.rejected.extend(scratch.rejected);
            }
            Ok(best_score)
        }
    }
}

#[derive(Debug, Clone)]
struct PendingAction {
    operation: OperationId,
    score: usize,
    root_priority: i32,
    leaf_fr: FrId,
    bindings: BTreeMap<ResourceTypeName, String>,
    index: usize,
}

impl PendingAction {
    fn order_key(&self) -> (i32, &str, usize) {
        (self.root_priority, self.operation.as_str(), self.index)
    }
}

/// Instantiates the plans' chosen operations from this iteration's true
/// rule evaluations, deduplicates OR-siblings, orders invalidating verbs
/// last, and applies the actions to the world.
pub fn execute(
    plans: &[Plan],
    evaluations: &[RuleEvaluation],
    world: &mut WorldState,
    bundle: &ModelBundle,
    ctx: &mut IterationCtx,
) -> (Vec<ActionOutcome>, Vec<SkippedAction>) {
    let mut skipped = Vec::new();
    let mut pending: Vec<PendingAction> = Vec::new();
    let mut seen: BTreeSet<(OperationId, Vec<(String, String)>)> = BTreeSet::new();
    for p in plans {
        for op_id in &p.chosen {
            let Some(op) = bundle.operations.get(op_id) else { continue };
            let Some(leaf) = bundle.leaf_of_ofr(&op.ofr) else { continue };
            let root_priority = bundle.requirements[root_of(&leaf.id, bundle)].priority;
            for ev in evaluations.iter().filter(|e| e.operation == *op_id && e.result) {
                let key = (
                    op_id.clone(),
                    ev.bindings
                        .iter()
                        .map(|(k, v)| (k.clone(), v.clone()))
                        .collect(),
                );
                if !seen.insert(key) {
                    continue;
                }
                pending.push(PendingAction {
                    operation: op_id.clone(),
                    score: p.scores.get(op_id).copied().unwrap_or(0),
                    root_priority,
                    leaf_fr: leaf.id.clone(),
                    bindings: ev.bindings.clone(),
                    index: pending.len(),
                });
            }
        }
    }

    // OR-sibling dedup: within each group of pendings whose leaves diverge
    // at an OR node, only the cheapest action runs.
    let mut group: Vec<usize> = (0..pending.len()).collect();
    for i in 0..pending.len() {
        for j in (i + 1)..pending.len() {
            let rel = query::relation(&pending[i].leaf_fr, &pending[j].leaf_fr, bundle)
                .unwrap_or(Relation::Unrelated);
            if rel == Relation::DivergesAtOr {
                let (gi, gj) = (group[i], group[j]);
                for g in group.iter_mut() {
                    if *g == gj {
                        *g = gi;
                    }
                }
            }
        }
    }
    let mut keep = vec![true; pending.len()];
    let groups: BTreeSet<usize> = group.iter().copied().collect();
    for g in groups {
        let members: Vec<usize> = (0..pending.len()).filter(|i| group[*i] == g).collect();
        if members.len() < 2 {
            continue;
        }
        let winner = *members
            .iter()
            .min_by_key(|i| (pending[**i].score, pending[**i].order_key()))
            .unwrap();
        for i in members {
            if i != winner {
                keep[i] = false;
                skipped.push(SkippedAction {
                    operation: pending[i].operation.clone(),
                    bindings: pending[i].bindings.clone(),
                    reason: "or_sibling_dedup".into(),
                });
            }
        }
    }
    let mut pending: Vec<PendingAction> = pending
        .into_iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(p, _)| p)
        .collect();

    // Ordering: an action that invalidates an instance runs after every
    // other action touching that instance. Cycles abort the lower-priority
    // action.
    let mut log = Vec::new();
    while !pending.is_empty() {
        let touched: Vec<BTreeSet<String>> = pending
            .iter()
            .map(|p| touched_instances(p, bundle))
            .collect();
        let invalidated: Vec<BTreeSet<String>> =
            pending.iter().map(|p| invalidated_instances(p, bundle)).collect();
        // p must wait while another pending action touches what p destroys.
        let ready: Vec<usize> = (0..pending.len())
            .filter(|i| {
                invalidated[*i].is_empty()
                    || (0..pending.len()).all(|j| {
                        j == *i || invalidated[*i].intersection(&touched[j]).next().is_none()
                    })
            })
            .collect();
        match ready.iter().min_by_key(|i| pending[**i].order_key()) {
            Some(&idx) => {
                let p = pending.remove(idx);
                let spec = &bundle.operations[&p.operation].action;
                let outcome = world.apply_action(&p.operation, spec, &p.bindings, ctx);
                log.push(outcome);
            }
            None => {
                // Every remaining action destroys something another one
                // needs; abort the least authoritative.
                let victim = (0..pending.len())
                    .max_by_key(|i| pending[*i].order_key())
                    .unwrap();
                let p = pending.remove(victim);
                skipped.push(SkippedAction {
                    operation: p.operation,
                    bindings: p.bindings,
                    reason: "ordering_cycle".into(),
                });
            }
        }
    }
    (log, skipped)
}

fn touched_instances(p: &PendingAction, bundle: &ModelBundle) -> BTreeSet<String> {
    let op = &bundle.operations[&p.operation];
    op.links
        .iter()
        .filter_map(|(ty, _)| p.bindings.get(ty).cloned())
        .collect()
}

fn invalidated_instances(p: &PendingAction, bundle: &ModelBundle) -> BTreeSet<String> {
    let op = &bundle.operations[&p.operation];
    let mut out = BTreeSet::new();
    match op.action.verb {
        Verb::RemoveItem => {
            if let Some(item) = p.bindings.get("Item") {
                out.insert(item.clone());
            }
        }
        Verb::RedirectOut => {
            if let Some(shopper) = p.bindings.get("Shopper") {
                out.insert(shopper.clone());
            }
        }
        _ => {}
    }
    out
}

/// Runs one full Monitor-Analyse-Plan-Execute cycle for a single event.
/// Returns the trace record and, for injection/retirement events, the new
/// bundle snapshot that takes effect at the next iteration boundary.
pub fn mape_iteration(
    event: &Event,
    world: &mut WorldState,
    bundle: &ModelBundle,
    state: &mut EngineState,
) -> (TraceRecord, Option<ModelBundle>) {
    let iteration = state.iteration;
    state.iteration += 1;
    let mut record = TraceRecord::new(iteration, event.clone());
    let mut next_bundle = None;

    match &event.kind {
        EventKind::InjectRequirement { fragment } => {
            world.clock = event.time;
            let merged = bundle.merged_with(fragment);
            let errs = merged.validate();
            if errs.is_empty() {
                next_bundle = Some(merged);
            } else {
                for e in errs {
                    record.errors.push(format!("inject rejected: {e}"));
                }
            }
        }
        EventKind::RetireRequirement { fr } => {
            world.clock = event.time;
            if bundle.requirements.contains_key(fr) {
                next_bundle = Some(bundle.without_requirement(fr));
            } else {
                record.errors.push(format!("retire rejected: unknown requirement `{fr}`"));
            }
        }
        kind => {
            let redirected_shopper = match kind {
                EventKind::AddItem { shopper, .. }
                | EventKind::RemoveItem { shopper, .. }
                | EventKind::Checkout { shopper } => world.shopper_redirected(shopper),
                _ => false,
            };
            if redirected_shopper {
                world.clock = event.time;
                record.event_rejected = Some("shopper_redirected".into());
            } else {
                match world.apply_event(event) {
                    Ok(diff) => record.event_diff = diff,
                    Err(e) => {
                        world.clock = event.time;
                        record.event_rejected = Some(e.to_string());
                    }
                }
            }

            if record.event_rejected.is_none() {
                let (evaluations, errors) = monitor(iteration, event, world, bundle);
                record.errors.extend(errors);
                record.evaluations = evaluations;
            }

            let mut ctx = IterationCtx::default();
            match analyse(&record.evaluations, &[], bundle, &state.effective) {
                Ok(first_pass) => {
                    record.remediation_targets = first_pass.targets.clone();
                    for target in &first_pass.targets {
                        match plan(target, &first_pass.effective, bundle) {
                            Ok(p) => record.plans.push(p),
                            Err(e) => record.errors.push(format!("plan {target}: {e}")),
                        }
                    }
                    let (outcomes, skipped) =
                        execute(&record.plans, &record.evaluations, world, bundle, &mut ctx);
                    record.actions = outcomes;
                    record.skipped = skipped;
                }
                Err(e) => record.errors.push(format!("analyse: {e}")),
            }

            if let EventKind::Checkout { shopper } = kind {
                if record.event_rejected.is_none() {
                    if ctx.blocked_checkouts.contains(shopper) {
                        record.checkout_blocked = true;
                    } else {
                        match world.finalize_checkout(shopper) {
                            Ok(diff) => record.checkout_diff = Some(diff),
                            Err(e) => record.errors.push(format!("checkout: {e}")),
                        }
                    }
                }
            }

            match analyse(&record.evaluations, &record.actions, bundle, &state.effective) {
                Ok(final_pass) => {
                    record.statuses = final_pass.statuses;
                    record.conflicts = final_pass.conflicts;
                    state.effective = final_pass.effective;
                }
                Err(e) => record.errors.push(format!("analyse: {e}")),
            }
        }
    }
    (record, next_bundle)
}

/// Folds the whole timeline through the loop. Injected snapshots take
/// effect from the following iteration.
pub fn run(
    timeline: &[Event],
    bundle: ModelBundle,
    world: WorldState,
) -> (crate::trace::AdaptationTrace, WorldState, ModelBundle) {
    let mut world = world;
    let mut bundle = bundle;
    let mut state = EngineState::default();
    let mut trace = crate::trace::AdaptationTrace::default();
    for event in timeline {
        let (record, next_bundle) = mape_iteration(event, &mut world, &bundle, &mut state);
        trace.records.push(record);
        if let Some(next) = next_bundle {
            bundle = next;
        }
    }
    (trace, world, bundle)
}
