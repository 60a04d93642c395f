//! Ready-made model bundles: the supermarket scenario used throughout the
//! documentation and tests, plus deterministic random generators for
//! property suites and benchmarks.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::*;

/// Small deterministic xorshift generator so fixtures need no external RNG.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.max(1))
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    /// Uniform value in `[0, bound)`.
    pub fn below(&mut self, bound: usize) -> usize {
        (self.next_u64() % bound.max(1) as u64) as usize
    }
}

pub fn stakeholder(id: &str, name: &str, kind: StakeholderKind) -> Stakeholder {
    Stakeholder {
        id: id.into(),
        name: name.into(),
        kind,
    }
}

pub fn cond_lit(root: &str, segs: &[&str], op: CmpOp, lit: Literal) -> Condition {
    Condition {
        lhs: FieldPath::new(root, segs),
        op,
        rhs: Operand::Literal(lit),
    }
}

pub fn action(
    name: &str,
    verb: Verb,
    params: &[(&str, Operand)],
    reads: &[&str],
    writes: &[&str],
) -> ActionSpec {
    ActionSpec {
        name: name.into(),
        verb,
        params: params
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect(),
        reads: reads.iter().map(|s| s.to_string()).collect(),
        writes: writes.iter().map(|s| s.to_string()).collect(),
    }
}

pub fn operation(id: &str, ofr: &str, rule: Rule, act: ActionSpec) -> Operation {
    let links = Operation::derive_links(&rule, &act);
    Operation {
        id: id.into(),
        ofr: ofr.into(),
        rule,
        action: act,
        links,
    }
}

pub fn leaf_fr(id: &str, desc: &str, by: &str, affects: &[&str], ofr: &str, priority: i32) -> FairnessRequirement {
    FairnessRequirement {
        id: id.into(),
        description: desc.into(),
        specified_by: by.into(),
        affects: affects.iter().map(|s| s.to_string()).collect(),
        decomposition: Decomposition::Leaf,
        children: vec![],
        ofr: Some(ofr.into()),
        priority,
    }
}

/// The shop scenario: equal access (FR0), an elder-shopping window with two
/// alternative operationalisations (FR1), a 20-item basket cap (FR2), and
/// unrestricted health items mandated by the government (FR3).
pub fn supermarket_bundle() -> ModelBundle {
    let mut bundle = ModelBundle::default();

    for s in [
        stakeholder("supermarket", "The Supermarket", StakeholderKind::Organization),
        stakeholder("shoppers", "Shoppers", StakeholderKind::Group),
        stakeholder("government", "The Government", StakeholderKind::Authority),
    ] {
        bundle.stakeholders.insert(s.id.clone(), s);
    }

    let days: Vec<String> = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for ty in [
        ResourceType {
            name: "Clock".into(),
            fields: BTreeMap::from([
                ("day".to_string(), FieldKind::Enum(days)),
                ("time".to_string(), FieldKind::TimeOfDay),
            ]),
        },
        ResourceType {
            name: "Shopper".into(),
            fields: BTreeMap::from([
                ("age".to_string(), FieldKind::Integer),
                (
                    "status".to_string(),
                    FieldKind::Enum(vec!["active".into(), "redirected".into()]),
                ),
                ("served".to_string(), FieldKind::Boolean),
            ]),
        },
        ResourceType {
            name: "Item".into(),
            fields: BTreeMap::from([
                (
                    "category".to_string(),
                    FieldKind::Enum(vec!["general".into(), "health".into()]),
                ),
                ("stock".to_string(), FieldKind::Integer),
            ]),
        },
        ResourceType {
            name: "Order".into(),
            fields: BTreeMap::from([
                ("owner".to_string(), FieldKind::Reference("Shopper".into())),
                ("items".to_string(), FieldKind::SetOf("Item".into())),
                ("size".to_string(), FieldKind::Integer),
                ("open".to_string(), FieldKind::Boolean),
            ]),
        },
    ] {
        bundle.resources.insert(ty.name.clone(), ty);
    }

    let elder_window_rule = Rule {
        conditions: vec![
            cond_lit("Clock", &["day"], CmpOp::Le, Literal::EnumValue("fri".into())),
            cond_lit("Clock", &["time"], CmpOp::Gt, Literal::Time(10 * 60)),
            cond_lit("Clock", &["time"], CmpOp::Lt, Literal::Time(13 * 60)),
            cond_lit("Shopper", &["age"], CmpOp::Lt, Literal::Int(65)),
        ],
    };

    let ops = vec![
        operation(
            "OR0_1",
            "OFR0_1",
            Rule {
                conditions: vec![cond_lit(
                    "Shopper",
                    &["status"],
                    CmpOp::Eq,
                    Literal::EnumValue("active".into()),
                )],
            },
            action(
                "mark_served",
                Verb::SetField,
                &[
                    ("path", Operand::Path(FieldPath::new("Shopper", &["served"]))),
                    ("value", Operand::Literal(Literal::Bool(true))),
                ],
                &[],
                &["Shopper"],
            ),
        ),
        operation(
            "OR1_1",
            "OFR1_1",
            elder_window_rule.clone(),
            action("remove_added_item", Verb::RemoveItem, &[], &[], &["Order"]),
        ),
        operation(
            "OR1_2",
            "OFR1_2",
            elder_window_rule,
            action("redirect_shopper", Verb::RedirectOut, &[], &[], &["Shopper"]),
        ),
        operation(
            "OR2_1",
            "OFR2_1",
            Rule {
                conditions: vec![cond_lit("Order", &["size"], CmpOp::Gt, Literal::Int(20))],
            },
            action(
                "cap_to_twenty",
                Verb::CapBasket,
                &[("limit", Operand::Literal(Literal::Int(20)))],
                &["Item"],
                &["Order"],
            ),
        ),
        operation(
            "OR3_1",
            "OFR3_1",
            Rule {
                conditions: vec![cond_lit(
                    "Item",
                    &["category"],
                    CmpOp::Eq,
                    Literal::EnumValue("health".into()),
                )],
            },
            action("exempt_health", Verb::ExemptItem, &[], &["Order"], &["Item"]),
        ),
    ];
    for op in ops {
        bundle.operations.insert(op.id.clone(), op);
    }

    let ofr_specs: &[(&str, &str, &[&str])] = &[
        ("OFR0_1", "supermarket", &["shoppers"]),
        ("OFR1_1", "supermarket", &["shoppers"]),
        ("OFR1_2", "supermarket", &["shoppers"]),
        ("OFR2_1", "supermarket", &["shoppers"]),
        ("OFR3_1", "government", &["shoppers"]),
    ];
    for (id, by, affects) in ofr_specs {
        let ops = bundle.operations_of_ofr(id);
        let policy = Policy {
            rule: ops[0].rule.clone(),
            actions: ops.iter().map(|o| o.action.clone()).collect(),
        };
        let ofr = OperationalRequirement {
            id: id.to_string(),
            specified_by: by.to_string(),
            affects: affects.iter().map(|s| s.to_string()).collect(),
            policy,
            resources: bundle.recompute_ofr_resources(id),
        };
        bundle.ofrs.insert(ofr.id.clone(), ofr);
    }

    let frs = vec![
        leaf_fr(
            "FR0",
            "Shoppers are treated equally for access to items",
            "supermarket",
            &["shoppers"],
            "OFR0_1",
            DEFAULT_PRIORITY,
        ),
        FairnessRequirement {
            id: "FR1".into(),
            description: "Elderly shoppers have priority during the elder shopping window on working days".into(),
            specified_by: "supermarket".into(),
            affects: BTreeSet::from(["shoppers".to_string(), "government".to_string()]),
            decomposition: Decomposition::Or,
            children: vec!["FR1_1".into(), "FR1_2".into()],
            ofr: None,
            priority: DEFAULT_PRIORITY,
        },
        leaf_fr(
            "FR1_1",
            "Remove items younger shoppers add during the elder window",
            "supermarket",
            &["shoppers"],
            "OFR1_1",
            DEFAULT_PRIORITY,
        ),
        leaf_fr(
            "FR1_2",
            "Redirect younger shoppers out of the system during the elder window",
            "supermarket",
            &["shoppers"],
            "OFR1_2",
            DEFAULT_PRIORITY,
        ),
        leaf_fr(
            "FR2",
            "Shoppers buy at most 20 items per shopping trip",
            "supermarket",
            &["shoppers"],
            "OFR2_1",
            DEFAULT_PRIORITY,
        ),
        leaf_fr(
            "FR3",
            "Health-related items are sold without any restriction",
            "government",
            &["shoppers"],
            "OFR3_1",
            0,
        ),
    ];
    for fr in frs {
        bundle.requirements.insert(fr.id.clone(), fr);
    }

    bundle
}

/// Random goal tree with at most `max_leaves` leaves, for exhaustive
/// propagation checks. Leaves own OFRs but no operations; only the forest
/// structure matters to the caller.
pub fn random_tree_bundle(rng: &mut Rng, max_depth: usize, max_fanout: usize, max_leaves: usize) -> ModelBundle {
    let mut bundle = ModelBundle::default();
    let s = stakeholder("owner", "Owner", StakeholderKind::Organization);
    bundle.stakeholders.insert(s.id.clone(), s);
    let leaf_budget = 1 + rng.below(max_leaves);
    let mut counter = 0usize;
    build_tree(rng, &mut bundle, max_depth, max_fanout, leaf_budget, &mut counter);
    bundle
}

fn build_tree(
    rng: &mut Rng,
    bundle: &mut ModelBundle,
    depth_left: usize,
    max_fanout: usize,
    leaf_budget: usize,
    counter: &mut usize,
) -> FrId {
    let id = format!("N{}", *counter);
    *counter += 1;
    if depth_left == 0 || leaf_budget <= 1 || rng.below(3) == 0 {
        let ofr_id = format!("L{}", id);
        bundle.ofrs.insert(
            ofr_id.clone(),
            OperationalRequirement {
                id: ofr_id.clone(),
                specified_by: "owner".into(),
                affects: BTreeSet::new(),
                policy: Policy {
                    rule: Rule { conditions: vec![] },
                    actions: vec![],
                },
                resources: BTreeSet::new(),
            },
        );
        let fr = leaf_fr(&id, "leaf", "owner", &[], &ofr_id, DEFAULT_PRIORITY);
        bundle.requirements.insert(id.clone(), fr);
        return id;
    }
    // Split the leaf budget over the children so the total never exceeds it.
    let fanout = 1 + rng.below(max_fanout.min(leaf_budget));
    let mut shares = vec![1usize; fanout];
    for _ in 0..(leaf_budget - fanout) {
        let idx = rng.below(fanout);
        shares[idx] += 1;
    }
    let mut children = Vec::new();
    for share in shares {
        children.push(build_tree(rng, bundle, depth_left - 1, max_fanout, share, counter));
    }
    let decomposition = if rng.below(2) == 0 {
        Decomposition::And
    } else {
        Decomposition::Or
    };
    bundle.requirements.insert(
        id.clone(),
        FairnessRequirement {
            id: id.clone(),
            description: "inner".into(),
            specified_by: "owner".into(),
            affects: BTreeSet::new(),
            decomposition,
            children,
            ofr: None,
            priority: DEFAULT_PRIORITY,
        },
    );
    id
}

/// Random tree-structured bundle where every leaf carries one or two real
/// operations, so the whole bundle survives a text round-trip. The derived
/// metadata (policies, resource sets, inherited leaf attribution) matches
/// what lowering a textual model produces.
pub fn random_full_bundle(rng: &mut Rng) -> ModelBundle {
    let mut bundle = ModelBundle::default();
    for s in [
        stakeholder("owner", "The Owner", StakeholderKind::Organization),
        stakeholder("patrons", "Patrons", StakeholderKind::Group),
        stakeholder("regulator", "The Regulator", StakeholderKind::Authority),
    ] {
        bundle.stakeholders.insert(s.id.clone(), s);
    }
    let resource_count = 2 + rng.below(3);
    for i in 0..resource_count {
        let name = format!("R{i}");
        bundle.resources.insert(
            name.clone(),
            ResourceType {
                name,
                fields: BTreeMap::from([
                    ("x".to_string(), FieldKind::Integer),
                    ("flag".to_string(), FieldKind::Boolean),
                    (
                        "cat".to_string(),
                        FieldKind::Enum(vec!["low".into(), "mid".into(), "high".into()]),
                    ),
                    ("when".to_string(), FieldKind::TimeOfDay),
                ]),
            },
        );
    }
    let leaf_budget = 1 + rng.below(6);
    let mut counters = (0usize, 0usize);
    build_full_tree(rng, &mut bundle, 3, 3, leaf_budget, &mut counters, resource_count);
    bundle
}

fn random_condition(rng: &mut Rng, resource_count: usize) -> Condition {
    let ty = format!("R{}", rng.below(resource_count));
    match rng.below(4) {
        0 => cond_lit(&ty, &["x"], CmpOp::Gt, Literal::Int(rng.below(100) as i64)),
        1 => cond_lit(&ty, &["flag"], CmpOp::Eq, Literal::Bool(rng.below(2) == 0)),
        2 => {
            let variant = ["low", "mid", "high"][rng.below(3)];
            cond_lit(&ty, &["cat"], CmpOp::Ne, Literal::EnumValue(variant.into()))
        }
        _ => cond_lit(&ty, &["when"], CmpOp::Le, Literal::Time(rng.below(1440) as u16)),
    }
}

fn build_full_tree(
    rng: &mut Rng,
    bundle: &mut ModelBundle,
    depth_left: usize,
    max_fanout: usize,
    leaf_budget: usize,
    counters: &mut (usize, usize),
    resource_count: usize,
) -> FrId {
    let id = format!("G{}", counters.0);
    counters.0 += 1;
    let holders = ["owner", "patrons", "regulator"];
    let specified_by = holders[rng.below(3)];
    let affects: Vec<&str> = holders
        .iter()
        .filter(|_| rng.below(2) == 0)
        .copied()
        .collect();
    let priority = rng.below(20) as i32;
    if depth_left == 0 || leaf_budget <= 1 || rng.below(3) == 0 {
        let ofr_id = format!("OG{}", id);
        let fr = leaf_fr(&id, "generated leaf", specified_by, &affects, &ofr_id, priority);
        bundle.requirements.insert(id.clone(), fr);
        for _ in 0..1 + rng.below(2) {
            let mut conditions = vec![random_condition(rng, resource_count)];
            if rng.below(2) == 0 {
                conditions.push(random_condition(rng, resource_count));
            }
            let write_ty = format!("R{}", rng.below(resource_count));
            let read_ty = format!("R{}", rng.below(resource_count));
            let reads: Vec<&str> = if rng.below(2) == 0 {
                vec![read_ty.as_str()]
            } else {
                vec![]
            };
            let act = action(
                &format!("adjust{}", counters.1),
                Verb::SetField,
                &[
                    ("path", Operand::Path(FieldPath::new(write_ty.as_str(), &["x"]))),
                    ("value", Operand::Literal(Literal::Int(rng.below(50) as i64))),
                ],
                &reads,
                &[write_ty.as_str()],
            );
            let op = operation(&format!("OP{}", counters.1), &ofr_id, Rule { conditions }, act);
            counters.1 += 1;
            bundle.operations.insert(op.id.clone(), op);
        }
        let ops = bundle.operations_of_ofr(&ofr_id);
        let ofr = OperationalRequirement {
            id: ofr_id.clone(),
            specified_by: specified_by.to_string(),
            affects: affects.iter().map(|s| s.to_string()).collect(),
            policy: Policy {
                rule: ops[0].rule.clone(),
                actions: ops.iter().map(|o| o.action.clone()).collect(),
            },
            resources: BTreeSet::new(),
        };
        bundle.ofrs.insert(ofr_id.clone(), ofr);
        let resources = bundle.recompute_ofr_resources(&ofr_id);
        bundle.ofrs.get_mut(&ofr_id).unwrap().resources = resources;
        return id;
    }
    let fanout = 1 + rng.below(max_fanout.min(leaf_budget));
    let mut shares = vec![1usize; fanout];
    for _ in 0..(leaf_budget - fanout) {
        let idx = rng.below(fanout);
        shares[idx] += 1;
    }
    let mut children = Vec::new();
    for share in shares {
        children.push(build_full_tree(
            rng,
            bundle,
            depth_left - 1,
            max_fanout,
            share,
            counters,
            resource_count,
        ));
    }
    let decomposition = if rng.below(2) == 0 {
        Decomposition::And
    } else {
        Decomposition::Or
    };
    bundle.requirements.insert(
        id.clone(),
        FairnessRequirement {
            id: id.clone(),
            description: "generated group".into(),
            specified_by: specified_by.into(),
            affects: affects.iter().map(|s| s.to_string()).collect(),
            decomposition,
            children,
            ofr: None,
            priority,
        },
    );
    id
}

/// Random flat model for conflict-detection checks and benchmarks:
/// `fr_count` leaf requirements, up to `op_count` operations spread over
/// them, `resource_count` resource types with random read/write links.
pub fn random_conflict_bundle(
    rng: &mut Rng,
    fr_count: usize,
    op_count: usize,
    resource_count: usize,
) -> ModelBundle {
    let mut bundle = ModelBundle::default();
    for s in [
        stakeholder("alpha", "Alpha", StakeholderKind::Organization),
        stakeholder("beta", "Beta", StakeholderKind::Group),
        stakeholder("gamma", "Gamma", StakeholderKind::Authority),
    ] {
        bundle.stakeholders.insert(s.id.clone(), s);
    }
    let holders = ["alpha", "beta", "gamma"];
    for i in 0..resource_count {
        let name = format!("R{i}");
        bundle.resources.insert(
            name.clone(),
            ResourceType {
                name,
                fields: BTreeMap::from([("x".to_string(), FieldKind::Integer)]),
            },
        );
    }
    let fr_count = fr_count.max(1);
    for i in 0..fr_count {
        let fr_id = format!("F{i}");
        let ofr_id = format!("OF{i}");
        let affects: BTreeSet<String> = holders
            .iter()
            .filter(|_| rng.below(2) == 0)
            .map(|s| s.to_string())
            .collect();
        bundle.ofrs.insert(
            ofr_id.clone(),
            OperationalRequirement {
                id: ofr_id.clone(),
                specified_by: "alpha".into(),
                affects: affects.clone(),
                policy: Policy {
                    rule: Rule { conditions: vec![] },
                    actions: vec![],
                },
                resources: BTreeSet::new(),
            },
        );
        let mut fr = leaf_fr(&fr_id, "random", "alpha", &[], &ofr_id, DEFAULT_PRIORITY);
        fr.affects = affects;
        bundle.requirements.insert(fr_id.clone(), fr);
    }
    // Every OFR gets at least one operation so resource reachability is total.
    for i in 0..op_count.max(fr_count) {
        let ofr_idx = if i < fr_count { i } else { rng.below(fr_count) };
        let read_ty = format!("R{}", rng.below(resource_count.max(1)));
        let write_ty = format!("R{}", rng.below(resource_count.max(1)));
        let rule = Rule {
            conditions: vec![cond_lit(&read_ty, &["x"], CmpOp::Gt, Literal::Int(0))],
        };
        let act = action(
            &format!("act{i}"),
            Verb::SetField,
            &[
                ("path", Operand::Path(FieldPath::new(write_ty.as_str(), &["x"]))),
                ("value", Operand::Literal(Literal::Int(1))),
            ],
            &[],
            &[write_ty.as_str()],
        );
        let op = operation(&format!("OP{i}"), &format!("OF{ofr_idx}"), rule, act);
        bundle.operations.insert(op.id.clone(), op);
    }
    for i in 0..fr_count {
        let id = format!("OF{i}");
        let resources = bundle.recompute_ofr_resources(&id);
        let ops = bundle.operations_of_ofr(&id);
        let policy = Policy {
            rule: ops[0].rule.clone(),
            actions: ops.iter().map(|o| o.action.clone()).collect(),
        };
        let ofr = bundle.ofrs.get_mut(&id).unwrap();
        ofr.resources = resources;
        ofr.policy = policy;
    }
    bundle
}
