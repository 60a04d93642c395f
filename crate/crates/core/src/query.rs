//! Pure queries over the requirement forest and operationalisation model:
//! resource reachability, satisfaction propagation, goal-tree relation
//! classification, and stakeholder overlap.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Access, Decomposition, FrId, ModelBundle, NodeStatus, OfrId, ResourceTypeName, StakeholderId,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("unknown requirement `{0}`")]
    UnknownNode(String),
    #[error("leaf `{0}` has no operation")]
    DanglingLeaf(String),
}

/// How two requirement nodes sit relative to each other in the forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Equal, or one is an ancestor of the other.
    SameBranch,
    DivergesAtAnd,
    DivergesAtOr,
    Unrelated,
}

/// Resource types reachable from `fr` through its operations, collapsed per
/// type: write wins over read when any contributing link writes.
pub fn resources_of(
    fr: &str,
    bundle: &ModelBundle,
) -> Result<BTreeMap<ResourceTypeName, Access>, QueryError> {
    let node = bundle
        .requirements
        .get(fr)
        .ok_or_else(|| QueryError::UnknownNode(fr.to_string()))?;
    let mut out: BTreeMap<ResourceTypeName, Access> = BTreeMap::new();
    match node.decomposition {
        Decomposition::Leaf => {
            let ofr = node
                .ofr
                .as_deref()
                .ok_or_else(|| QueryError::DanglingLeaf(node.id.clone()))?;
            let ops = bundle.operations_of_ofr(ofr);
            if ops.is_empty() {
                return Err(QueryError::DanglingLeaf(ofr.to_string()));
            }
            for op in ops {
                for (ty, access) in &op.links {
                    merge_access(&mut out, ty, *access);
                }
            }
        }
        Decomposition::And | Decomposition::Or => {
            if node.children.is_empty() {
                return Err(QueryError::DanglingLeaf(node.id.clone()));
            }
            for child in &node.children {
                for (ty, access) in resources_of(child, bundle)? {
                    merge_access(&mut out, &ty, access);
                }
            }
        }
    }
    Ok(out)
}

fn merge_access(map: &mut BTreeMap<ResourceTypeName, Access>, ty: &str, access: Access) {
    map.entry(ty.to_string())
        .and_modify(|a| {
            if access == Access::Write {
                *a = Access::Write;
            }
        })
        .or_insert(access);
}

/// Propagates leaf statuses up the forest.
///
/// AND nodes are violated as soon as any child is, otherwise fulfilled if
/// any child is, otherwise idle. OR nodes are violated only when every child
/// is, fulfilled if any child is, otherwise idle.
pub fn propagate_satisfaction(
    bundle: &ModelBundle,
    leaf_statuses: &BTreeMap<OfrId, NodeStatus>,
) -> BTreeMap<FrId, NodeStatus> {
    let mut out = BTreeMap::new();
    for id in bundle.requirements.keys() {
        node_status(id, bundle, leaf_statuses, &mut out);
    }
    out
}

fn node_status(
    id: &str,
    bundle: &ModelBundle,
    leaf_statuses: &BTreeMap<OfrId, NodeStatus>,
    memo: &mut BTreeMap<FrId, NodeStatus>,
) -> NodeStatus {
    if let Some(s) = memo.get(id) {
        return *s;
    }
    let node = &bundle.requirements[id];
    let status = match node.decomposition {
        Decomposition::Leaf => node
            .ofr
            .as_deref()
            .and_then(|ofr| leaf_statuses.get(ofr).copied())
            .map(normalise)
            .unwrap_or(NodeStatus::Idle),
        Decomposition::And => {
            let children: Vec<NodeStatus> = node
                .children
                .iter()
                .map(|c| node_status(c, bundle, leaf_statuses, memo))
                .collect();
            if children.contains(&NodeStatus::Violated) {
                NodeStatus::Violated
            } else if children.contains(&NodeStatus::Fulfilled) {
                NodeStatus::Fulfilled
            } else {
                NodeStatus::Idle
            }
        }
        Decomposition::Or => {
            let children: Vec<NodeStatus> = node
                .children
                .iter()
                .map(|c| node_status(c, bundle, leaf_statuses, memo))
                .collect();
            if !children.is_empty() && children.iter().all(|s| *s == NodeStatus::Violated) {
                NodeStatus::Violated
            } else if children.contains(&NodeStatus::Fulfilled) {
                NodeStatus::Fulfilled
            } else {
                NodeStatus::Idle
            }
        }
    };
    memo.insert(id.to_string(), status);
    status
}

fn normalise(s: NodeStatus) -> NodeStatus {
    // Propagation is three-valued; an explained conflict is still a
    // violation as far as parents are concerned.
    match s {
        NodeStatus::ConflictExplained => NodeStatus::Violated,
        other => other,
    }
}

/// Classifies the relation between two requirement nodes by their lowest
/// common ancestor's decomposition kind.
pub fn relation(a: &str, b: &str, bundle: &ModelBundle) -> Result<Relation, QueryError> {
    for id in [a, b] {
        if !bundle.requirements.contains_key(id) {
            return Err(QueryError::UnknownNode(id.to_string()));
        }
    }
    let parents = bundle.parents();
    let chain_a = ancestor_chain(a, &parents);
    let chain_b = ancestor_chain(b, &parents);
    if chain_a.contains(&b) || chain_b.contains(&a) {
        return Ok(Relation::SameBranch);
    }
    let set_a: BTreeSet<&str> = chain_a.iter().copied().collect();
    let lca = chain_b.iter().find(|anc| set_a.contains(**anc));
    match lca {
        None => Ok(Relation::Unrelated),
        Some(anc) => match bundle.requirements[*anc].decomposition {
            Decomposition::And => Ok(Relation::DivergesAtAnd),
            Decomposition::Or => Ok(Relation::DivergesAtOr),
            Decomposition::Leaf => unreachable!("leaf cannot be an inner ancestor"),
        },
    }
}

fn ancestor_chain<'a>(start: &'a str, parents: &BTreeMap<&'a str, &'a str>) -> Vec<&'a str> {
    let mut chain = vec![start];
    let mut cur = start;
    while let Some(p) = parents.get(cur) {
        chain.push(*p);
        cur = p;
    }
    chain
}

/// Intersection of the two affected-stakeholder sets. Groups are opaque ids,
/// so overlap is id equality, not membership reasoning.
pub fn affected_overlap(
    a: &str,
    b: &str,
    bundle: &ModelBundle,
) -> Result<BTreeSet<StakeholderId>, QueryError> {
    let fa = bundle
        .requirements
        .get(a)
        .ok_or_else(|| QueryError::UnknownNode(a.to_string()))?;
    let fb = bundle
        .requirements
        .get(b)
        .ok_or_else(|| QueryError::UnknownNode(b.to_string()))?;
    Ok(fa.affects.intersection(&fb.affects).cloned().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{random_tree_bundle, supermarket_bundle, Rng};
    use crate::model::Operation;

    /// Independent recursive oracle for satisfaction propagation.
    fn oracle_status(id: &str, bundle: &ModelBundle, leaves: &BTreeMap<OfrId, NodeStatus>) -> NodeStatus {
        let node = &bundle.requirements[id];
        match node.decomposition {
            Decomposition::Leaf => leaves
                .get(node.ofr.as_deref().unwrap())
                .copied()
                .unwrap_or(NodeStatus::Idle),
            Decomposition::And => {
                let cs: Vec<_> = node
                    .children
                    .iter()
                    .map(|c| oracle_status(c, bundle, leaves))
                    .collect();
                if cs.iter().any(|s| *s == NodeStatus::Violated) {
                    NodeStatus::Violated
                } else if cs.iter().any(|s| *s == NodeStatus::Fulfilled) {
                    NodeStatus::Fulfilled
                } else {
                    NodeStatus::Idle
                }
            }
            Decomposition::Or => {
                let cs: Vec<_> = node
                    .children
                    .iter()
                    .map(|c| oracle_status(c, bundle, leaves))
                    .collect();
                if cs.iter().all(|s| *s == NodeStatus::Violated) {
                    NodeStatus::Violated
                } else if cs.iter().any(|s| *s == NodeStatus::Fulfilled) {
                    NodeStatus::Fulfilled
                } else {
                    NodeStatus::Idle
                }
            }
        }
    }

    #[test]
    fn resources_of_fr1_unions_both_alternatives() {
        let bundle = supermarket_bundle();
        let got = resources_of("FR1", &bundle).unwrap();
        let want: BTreeMap<String, Access> = [
            ("Clock".to_string(), Access::Read),
            ("Order".to_string(), Access::Write),
            ("Shopper".to_string(), Access::Write),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn resources_of_leaf_is_its_operation_links() {
        let bundle = supermarket_bundle();
        let got = resources_of("FR1_2", &bundle).unwrap();
        let op = &bundle.operations["OR1_2"];
        let mut want = BTreeMap::new();
        for (ty, access) in &op.links {
            super::merge_access(&mut want, ty, *access);
        }
        assert_eq!(got, want);
    }

    #[test]
    fn resources_of_reports_dangling_leaf() {
        let mut bundle = supermarket_bundle();
        bundle.operations.remove("OR1_1");
        assert_eq!(
            resources_of("FR1_1", &bundle),
            Err(QueryError::DanglingLeaf("OFR1_1".into()))
        );
    }

    #[test]
    fn resources_of_is_monotone_in_operations() {
        let bundle = supermarket_bundle();
        let before = resources_of("FR1", &bundle).unwrap();
        let mut grown = bundle.clone();
        let mut extra = grown.operations["OR2_1"].clone();
        extra.id = "OR1_3".into();
        extra.ofr = "OFR1_2".into();
        grown.operations.insert("OR1_3".into(), extra);
        let after = resources_of("FR1", &grown).unwrap();
        for (ty, _) in &before {
            assert!(after.contains_key(ty), "lost resource {ty}");
        }
    }

    #[test]
    fn and_with_violated_child_is_violated() {
        let mut bundle = supermarket_bundle();
        bundle.requirements.get_mut("FR1").unwrap().decomposition = Decomposition::And;
        let leaves: BTreeMap<OfrId, NodeStatus> = [
            ("OFR1_1".to_string(), NodeStatus::Fulfilled),
            ("OFR1_2".to_string(), NodeStatus::Violated),
        ]
        .into_iter()
        .collect();
        let statuses = propagate_satisfaction(&bundle, &leaves);
        assert_eq!(statuses["FR1"], NodeStatus::Violated);
    }

    #[test]
    fn or_with_fulfilled_child_is_fulfilled() {
        let bundle = supermarket_bundle();
        let leaves: BTreeMap<OfrId, NodeStatus> = [
            ("OFR1_1".to_string(), NodeStatus::Violated),
            ("OFR1_2".to_string(), NodeStatus::Fulfilled),
        ]
        .into_iter()
        .collect();
        let statuses = propagate_satisfaction(&bundle, &leaves);
        assert_eq!(statuses["FR1"], NodeStatus::Fulfilled);
    }

    #[test]
    fn all_idle_leaves_give_all_idle_nodes() {
        let bundle = supermarket_bundle();
        let leaves: BTreeMap<OfrId, NodeStatus> = bundle
            .ofrs
            .keys()
            .map(|id| (id.clone(), NodeStatus::Idle))
            .collect();
        let statuses = propagate_satisfaction(&bundle, &leaves);
        for (fr, status) in &statuses {
            assert_eq!(*status, NodeStatus::Idle, "node {fr}");
            assert_eq!(*status, oracle_status(fr, &bundle, &leaves));
        }
    }

    #[test]
    fn propagation_matches_oracle_on_random_trees_exhaustively() {
        let statuses = [NodeStatus::Fulfilled, NodeStatus::Violated, NodeStatus::Idle];
        let mut rng = Rng::new(0x5eed);
        for case in 0..60 {
            let bundle = random_tree_bundle(&mut rng, 6, 4, 8);
            let leaf_ids: Vec<OfrId> = bundle.ofrs.keys().cloned().collect();
            assert!(leaf_ids.len() <= 8);
            let total = 3usize.pow(leaf_ids.len() as u32);
            for mut assignment in 0..total {
                let mut leaves = BTreeMap::new();
                for id in &leaf_ids {
                    leaves.insert(id.clone(), statuses[assignment % 3]);
                    assignment /= 3;
                }
                let got = propagate_satisfaction(&bundle, &leaves);
                for fr in bundle.requirements.keys() {
                    assert_eq!(
                        got[fr],
                        oracle_status(fr, &bundle, &leaves),
                        "case {case}, node {fr}"
                    );
                }
            }
        }
    }

    #[test]
    fn or_siblings_diverge_at_or() {
        let bundle = supermarket_bundle();
        assert_eq!(
            relation("FR1_1", "FR1_2", &bundle).unwrap(),
            Relation::DivergesAtOr
        );
    }

    #[test]
    fn relation_is_reflexively_same_branch() {
        let bundle = supermarket_bundle();
        assert_eq!(relation("FR1", "FR1", &bundle).unwrap(), Relation::SameBranch);
        assert_eq!(relation("FR1", "FR1_1", &bundle).unwrap(), Relation::SameBranch);
    }

    #[test]
    fn separate_roots_are_unrelated() {
        let bundle = supermarket_bundle();
        assert_eq!(relation("FR2", "FR3", &bundle).unwrap(), Relation::Unrelated);
    }

    #[test]
    fn relation_unknown_node_is_an_error() {
        let bundle = supermarket_bundle();
        assert_eq!(
            relation("FR9", "FR1", &bundle),
            Err(QueryError::UnknownNode("FR9".into()))
        );
    }

    #[test]
    fn relation_is_symmetric() {
        let bundle = supermarket_bundle();
        let ids: Vec<&String> = bundle.requirements.keys().collect();
        for a in &ids {
            for b in &ids {
                assert_eq!(
                    relation(a, b, &bundle).unwrap(),
                    relation(b, a, &bundle).unwrap(),
                    "{a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn overlap_of_fr1_and_fr3_is_shoppers() {
        let bundle = supermarket_bundle();
        let got = affected_overlap("FR1", "FR3", &bundle).unwrap();
        assert_eq!(got, BTreeSet::from(["shoppers".to_string()]));
    }

    #[test]
    fn overlap_is_symmetric_and_self_is_identity() {
        let bundle = supermarket_bundle();
        let ids: Vec<&String> = bundle.requirements.keys().collect();
        for a in &ids {
            assert_eq!(
                affected_overlap(a, a, &bundle).unwrap(),
                bundle.requirements[*a].affects
            );
            for b in &ids {
                assert_eq!(
                    affected_overlap(a, b, &bundle).unwrap(),
                    affected_overlap(b, a, &bundle).unwrap()
                );
            }
        }
    }

    #[test]
    fn disjoint_affects_sets_overlap_empty() {
        let mut bundle = supermarket_bundle();
        bundle.requirements.get_mut("FR2").unwrap().affects =
            BTreeSet::from(["government".to_string()]);
        assert!(affected_overlap("FR2", "FR1_1", &bundle).unwrap().is_empty());
    }

    // Keeps the fixture honest about derivable links.
    #[test]
    fn fixture_links_match_derivation() {
        let bundle = supermarket_bundle();
        for op in bundle.operations.values() {
            assert_eq!(op.links, Operation::derive_links(&op.rule, &op.action), "{}", op.id);
        }
    }
}
