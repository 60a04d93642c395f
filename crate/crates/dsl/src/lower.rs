//! Lowers the parsed AST into a validated model bundle. Resolution errors
//! point at the offending identifier; a final whole-bundle validation pass
//! backstops anything the targeted checks missed.

use std::collections::{BTreeMap, BTreeSet};

use fairadapt_core::model::{
    ActionSpec, Condition, Decomposition, FairnessRequirement, FieldKind, FieldPath, Literal,
    ModelBundle, ModelError, Operand, Operation, OperationalRequirement, Policy, ResourceType,
    Rule, Stakeholder, StakeholderKind, Verb, DEFAULT_PRIORITY,
};

use crate::diag::{self, Diagnostic, SourceSpan};
use crate::parser::{
    ActionAst, Decl, KindAst, LiteralAst, OperandAst, PathAst, ReqBodyAst, Spanned,
};

/// Lowered bundle plus any warnings. On failure every collected error is
/// returned, not just the first.
pub fn lower(
    decls: &[Decl],
    file: &str,
    context: Option<&ModelBundle>,
) -> Result<(ModelBundle, Vec<Diagnostic>), Vec<Diagnostic>> {
    let mut errors: Vec<Diagnostic> = Vec::new();
    let mut warnings: Vec<Diagnostic> = Vec::new();
    let empty = ModelBundle::default();
    let context = context.unwrap_or(&empty);
    let file_start = SourceSpan {
        file: file.to_string(),
        line: 1,
        column: 1,
        length: 0,
    };

    if decls.is_empty() {
        warnings.push(Diagnostic::warning(
            diag::NO_DECLARATIONS,
            "no declarations",
            file_start.clone(),
        ));
        return Ok((ModelBundle::default(), warnings));
    }

    let mut bundle = ModelBundle::default();
    // Span of each declared id, for duplicate reports and the backstop.
    let mut decl_spans: BTreeMap<String, SourceSpan> = BTreeMap::new();
    let mut check_dup = |id: &Spanned<String>, errors: &mut Vec<Diagnostic>| {
        if let Some(_prev) = decl_spans.get(&id.value) {
            errors.push(Diagnostic::error(
                diag::DUPLICATE_DECL,
                format!("`{}` is declared twice in this file", id.value),
                id.span.clone(),
            ));
        } else {
            decl_spans.insert(id.value.clone(), id.span.clone());
        }
    };

    // Pass 1: stakeholders and resources, so rules can resolve against them.
    for decl in decls {
        match decl {
            Decl::Stakeholder { id, kind, name } => {
                check_dup(id, &mut errors);
                let kind_value = match kind.value.as_str() {
                    "individual" => StakeholderKind::Individual,
                    "group" => StakeholderKind::Group,
                    "organization" => StakeholderKind::Organization,
                    "authority" => StakeholderKind::Authority,
                    other => {
                        errors.push(Diagnostic::error(
                            diag::UNEXPECTED_TOKEN,
                            format!("unknown stakeholder kind `{other}`"),
                            kind.span.clone(),
                        ));
                        StakeholderKind::Individual
                    }
                };
                bundle.stakeholders.insert(
                    id.value.clone(),
                    Stakeholder {
                        id: id.value.clone(),
                        name: name
                            .as_ref()
                            .map(|n| n.value.clone())
                            .unwrap_or_else(|| id.value.clone()),
                        kind: kind_value,
                    },
                );
            }
            Decl::Resource { id, fields } => {
                check_dup(id, &mut errors);
                let mut field_map = BTreeMap::new();
                for (field, kind) in fields {
                    let lowered = match kind {
                        KindAst::Int => FieldKind::Integer,
                        KindAst::Bool => FieldKind::Boolean,
                        KindAst::Text => FieldKind::Text,
                        KindAst::Time => FieldKind::TimeOfDay,
                        KindAst::Enum(variants) => {
                            FieldKind::Enum(variants.iter().map(|v| v.value.clone()).collect())
                        }
                        KindAst::Ref(ty) => FieldKind::Reference(ty.value.clone()),
                        KindAst::Set(ty) => FieldKind::SetOf(ty.value.clone()),
                    };
                    field_map.insert(field.value.clone(), lowered);
                }
                bundle.resources.insert(
                    id.value.clone(),
                    ResourceType {
                        name: id.value.clone(),
                        fields: field_map,
                    },
                );
            }
            _ => {}
        }
    }

    let merged_resources = |bundle: &ModelBundle| -> BTreeMap<String, ResourceType> {
        let mut all = context.resources.clone();
        all.extend(bundle.resources.clone());
        all
    };
    let resources = merged_resources(&bundle);

    // Referenced types inside ref()/set() fields must exist.
    for decl in decls {
        if let Decl::Resource { fields, .. } = decl {
            for (_, kind) in fields {
                if let KindAst::Ref(ty) | KindAst::Set(ty) = kind {
                    if !resources.contains_key(&ty.value) {
                        errors.push(Diagnostic::error(
                            diag::UNKNOWN_TYPE,
                            format!("unknown resource type `{}`", ty.value),
                            ty.span.clone(),
                        ));
                    }
                }
            }
        }
    }

    let stakeholder_known = |id: &str| {
        bundle.stakeholders.contains_key(id) || context.stakeholders.contains_key(id)
    };

    // Pass 2: requirements; leaves create their operational requirement.
    let mut leaf_decls: Vec<(&Spanned<String>, Option<&Vec<Spanned<String>>>)> = Vec::new();
    for decl in decls {
        if let Decl::Requirement {
            id,
            description,
            specified_by,
            affects,
            priority,
            body,
        } = decl
        {
            check_dup(id, &mut errors);
            if !stakeholder_known(&specified_by.value) {
                errors.push(Diagnostic::error(
                    diag::UNKNOWN_STAKEHOLDER,
                    format!("unknown stakeholder `{}`", specified_by.value),
                    specified_by.span.clone(),
                ));
            }
            for a in affects {
                if !stakeholder_known(&a.value) {
                    errors.push(Diagnostic::error(
                        diag::UNKNOWN_STAKEHOLDER,
                        format!("unknown stakeholder `{}`", a.value),
                        a.span.clone(),
                    ));
                }
            }
            let affects_set: BTreeSet<String> =
                affects.iter().map(|a| a.value.clone()).collect();
            let (decomposition, children, ofr) = match body {
                ReqBodyAst::Decompose { or, children } => (
                    if *or {
                        Decomposition::Or
                    } else {
                        Decomposition::And
                    },
                    children.iter().map(|c| c.value.clone()).collect(),
                    None,
                ),
                ReqBodyAst::Leaf { ofr, resources } => {
                    check_dup(ofr, &mut errors);
                    leaf_decls.push((ofr, resources.as_ref()));
                    bundle.ofrs.insert(
                        ofr.value.clone(),
                        OperationalRequirement {
                            id: ofr.value.clone(),
                            specified_by: specified_by.value.clone(),
                            affects: affects_set.clone(),
                            policy: Policy {
                                rule: Rule { conditions: vec![] },
                                actions: vec![],
                            },
                            resources: BTreeSet::new(),
                        },
                    );
                    (Decomposition::Leaf, vec![], Some(ofr.value.clone()))
                }
            };
            bundle.requirements.insert(
                id.value.clone(),
                FairnessRequirement {
                    id: id.value.clone(),
                    description: description.value.clone(),
                    specified_by: specified_by.value.clone(),
                    affects: affects_set,
                    decomposition,
                    children,
                    ofr,
                    priority: priority.as_ref().map(|p| p.value as i32).unwrap_or(DEFAULT_PRIORITY),
                },
            );
        }
    }

    // Child references must resolve (within this file or the context).
    for decl in decls {
        if let Decl::Requirement {
            body: ReqBodyAst::Decompose { children, .. },
            ..
        } = decl
        {
            for child in children {
                if !bundle.requirements.contains_key(&child.value)
                    && !context.requirements.contains_key(&child.value)
                {
                    errors.push(Diagnostic::error(
                        diag::UNKNOWN_REQUIREMENT,
                        format!("unknown requirement `{}`", child.value),
                        child.span.clone(),
                    ));
                }
            }
        }
    }

    // Pass 3: operations.
    for decl in decls {
        if let Decl::Operation {
            id,
            ofr,
            rule,
            action,
        } = decl
        {
            check_dup(id, &mut errors);
            if !bundle.ofrs.contains_key(&ofr.value) && !context.ofrs.contains_key(&ofr.value) {
                errors.push(Diagnostic::error(
                    diag::UNKNOWN_OFR,
                    format!("no leaf requirement declares operational requirement `{}`", ofr.value),
                    ofr.span.clone(),
                ));
            }
            let mut conditions = Vec::new();
            for cond in rule {
                match lower_condition(cond, &resources) {
                    Ok(c) => conditions.push(c),
                    Err(mut e) => errors.append(&mut e),
                }
            }
            match lower_action(action, &resources) {
                Ok(spec) => {
                    let rule = Rule { conditions };
                    let links = Operation::derive_links(&rule, &spec);
                    bundle.operations.insert(
                        id.value.clone(),
                        Operation {
                            id: id.value.clone(),
                            ofr: ofr.value.clone(),
                            rule,
                            action: spec,
                            links,
                        },
                    );
                }
                Err(mut e) => errors.append(&mut e),
            }
        }
    }

    // Pass 4: derive each new operational requirement's policy and resource
    // set from its operations, then check any declared set against it.
    let merged = context.merged_with(&bundle);
    for (ofr_id, declared) in &leaf_decls {
        let ops = merged.operations_of_ofr(&ofr_id.value);
        if ops.is_empty() {
            errors.push(Diagnostic::error(
                diag::LEAF_WITHOUT_OPERATION,
                format!("operational requirement `{}` has no operation", ofr_id.value),
                ofr_id.span.clone(),
            ));
            continue;
        }
        let policy = Policy {
            rule: ops[0].rule.clone(),
            actions: ops.iter().map(|o| o.action.clone()).collect(),
        };
        let recomputed = merged.recompute_ofr_resources(&ofr_id.value);
        if let Some(declared) = declared {
            let declared_set: BTreeSet<String> =
                declared.iter().map(|r| r.value.clone()).collect();
            for r in *declared {
                if !resources.contains_key(&r.value) {
                    errors.push(Diagnostic::error(
                        diag::UNKNOWN_TYPE,
                        format!("unknown resource type `{}`", r.value),
                        r.span.clone(),
                    ));
                }
            }
            if declared_set != recomputed {
                errors.push(Diagnostic::error(
                    diag::RESOURCE_SET_MISMATCH,
                    format!(
                        "`{}` declares resources [{}] but its operations use [{}]",
                        ofr_id.value,
                        declared_set.iter().cloned().collect::<Vec<_>>().join(", "),
                        recomputed.iter().cloned().collect::<Vec<_>>().join(", ")
                    ),
                    ofr_id.span.clone(),
                ));
            }
        }
        if let Some(entry) = bundle.ofrs.get_mut(&ofr_id.value) {
            entry.policy = policy;
            entry.resources = recomputed;
        }
    }

    // Backstop: run every model invariant over the merged view and map
    // anything the targeted checks missed onto declaration spans.
    if errors.is_empty() {
        let merged = context.merged_with(&bundle);
        for err in merged.validate() {
            let (code, anchor) = classify(&err);
            let span = anchor
                .and_then(|id| decl_spans.get(&id).cloned())
                .unwrap_or_else(|| file_start.clone());
            errors.push(Diagnostic::error(code, err.to_string(), span));
        }
    }

    if errors.is_empty() {
        Ok((bundle, warnings))
    } else {
        Err(errors)
    }
}

/// Error code plus the declaration id whose span best locates the problem.
fn classify(err: &ModelError) -> (&'static str, Option<String>) {
    match err {
        ModelError::UnknownType(t) => (diag::UNKNOWN_TYPE, Some(t.clone())),
        ModelError::UnknownField { ty, .. } => (diag::UNKNOWN_FIELD, Some(ty.clone())),
        ModelError::NonScalarTerminal(_) => (diag::NON_SCALAR_TERMINAL, None),
        ModelError::UnknownStakeholder(s) => (diag::UNKNOWN_STAKEHOLDER, Some(s.clone())),
        ModelError::UnknownRequirement(r) => (diag::UNKNOWN_REQUIREMENT, Some(r.clone())),
        ModelError::UnknownOfr(o) => (diag::UNKNOWN_OFR, Some(o.clone())),
        ModelError::NotAForest(r) => (diag::NOT_A_FOREST, Some(r.clone())),
        ModelError::EmptyDecomposition(r) => (diag::EMPTY_DECOMPOSITION, Some(r.clone())),
        ModelError::LeafWithoutOfr(r) => (diag::MODEL_INVARIANT, Some(r.clone())),
        ModelError::DanglingLeaf(o) => (diag::LEAF_WITHOUT_OPERATION, Some(o.clone())),
        ModelError::EmptyRule(op) => (diag::EMPTY_RULE, Some(op.clone())),
        ModelError::ResourceSetMismatch { ofr, .. } => {
            (diag::RESOURCE_SET_MISMATCH, Some(ofr.clone()))
        }
        ModelError::MissingParam { action, .. } => (diag::MISSING_PARAM, Some(action.clone())),
        ModelError::IncomparableKinds(_) => (diag::INCOMPARABLE_KINDS, None),
        ModelError::TimeOutOfRange(_) => (diag::TIME_OUT_OF_RANGE, None),
        _ => (diag::MODEL_INVARIANT, None),
    }
}

/// Walks a dotted path through the resource model, reporting the exact
/// offending segment. Returns the terminal field kind.
fn resolve_path_ast(
    path: &PathAst,
    resources: &BTreeMap<String, ResourceType>,
) -> Result<(FieldPath, FieldKind), Vec<Diagnostic>> {
    let root = &path.segments[0];
    let Some(mut ty) = resources.get(&root.value) else {
        return Err(vec![Diagnostic::error(
            diag::UNKNOWN_TYPE,
            format!("unknown resource type `{}`", root.value),
            root.span.clone(),
        )]);
    };
    if path.segments.len() == 1 {
        return Err(vec![Diagnostic::error(
            diag::UNKNOWN_FIELD,
            format!("path `{}` names a type but no field", root.value),
            root.span.clone(),
        )]);
    }
    let mut kind = None;
    for (i, seg) in path.segments.iter().enumerate().skip(1) {
        let Some(field_kind) = ty.fields.get(&seg.value) else {
            return Err(vec![Diagnostic::error(
                diag::UNKNOWN_FIELD,
                format!("resource type `{}` has no field `{}`", ty.name, seg.value),
                seg.span.clone(),
            )]);
        };
        let last = i == path.segments.len() - 1;
        match field_kind {
            FieldKind::Reference(target) if !last => {
                ty = resources.get(target).ok_or_else(|| {
                    vec![Diagnostic::error(
                        diag::UNKNOWN_TYPE,
                        format!("unknown resource type `{target}`"),
                        seg.span.clone(),
                    )]
                })?;
            }
            _ if !last => {
                return Err(vec![Diagnostic::error(
                    diag::NON_SCALAR_TERMINAL,
                    format!("cannot descend into scalar field `{}`", seg.value),
                    path.segments[i + 1].span.clone(),
                )]);
            }
            _ if !field_kind.is_scalar() => {
                return Err(vec![Diagnostic::error(
                    diag::NON_SCALAR_TERMINAL,
                    format!("path ends on non-scalar field `{}`", seg.value),
                    seg.span.clone(),
                )]);
            }
            _ => kind = Some(field_kind.clone()),
        }
    }
    let fp = FieldPath {
        root: path.segments[0].value.clone(),
        segments: path.segments[1..].iter().map(|s| s.value.clone()).collect(),
    };
    Ok((fp, kind.expect("terminal kind set")))
}

fn lower_condition(
    cond: &crate::parser::ConditionAst,
    resources: &BTreeMap<String, ResourceType>,
) -> Result<Condition, Vec<Diagnostic>> {
    let (lhs, lhs_kind) = resolve_path_ast(&cond.lhs, resources)?;
    let rhs = match &cond.rhs {
        OperandAst::Path(p) => {
            let (rp, rhs_kind) = resolve_path_ast(p, resources)?;
            if !kinds_comparable(&lhs_kind, &rhs_kind) {
                return Err(vec![Diagnostic::error(
                    diag::INCOMPARABLE_KINDS,
                    format!("`{rp}` cannot be compared with `{lhs}`"),
                    p.span(),
                )]);
            }
            Operand::Path(rp)
        }
        OperandAst::Literal(lit) => Operand::Literal(lower_literal(lit, &lhs_kind, &lhs)?),
    };
    Ok(Condition {
        lhs,
        op: cond.op,
        rhs,
    })
}

fn kinds_comparable(a: &FieldKind, b: &FieldKind) -> bool {
    use std::mem::discriminant;
    discriminant(a) == discriminant(b)
}

/// Checks the literal against the field kind it is compared to (or stored
/// into); bare words must be variants of the enum field.
fn lower_literal(
    lit: &Spanned<LiteralAst>,
    kind: &FieldKind,
    path: &FieldPath,
) -> Result<Literal, Vec<Diagnostic>> {
    let mismatch = |expected: &str| {
        vec![Diagnostic::error(
            diag::INCOMPARABLE_KINDS,
            format!("`{path}` is {expected}; this literal does not match"),
            lit.span.clone(),
        )]
    };
    match (&lit.value, kind) {
        (LiteralAst::Int(n), FieldKind::Integer) => Ok(Literal::Int(*n)),
        (LiteralAst::Bool(b), FieldKind::Boolean) => Ok(Literal::Bool(*b)),
        (LiteralAst::Text(s), FieldKind::Text) => Ok(Literal::Text(s.clone())),
        (LiteralAst::Time(t), FieldKind::TimeOfDay) => Ok(Literal::Time(*t)),
        (LiteralAst::Word(w), FieldKind::Enum(variants)) => {
            if variants.contains(w) {
                Ok(Literal::EnumValue(w.clone()))
            } else {
                Err(vec![Diagnostic::error(
                    diag::INCOMPARABLE_KINDS,
                    format!("`{w}` is not a variant of the enum field `{path}`"),
                    lit.span.clone(),
                )])
            }
        }
        (_, FieldKind::Integer) => Err(mismatch("an integer field")),
        (_, FieldKind::Boolean) => Err(mismatch("a boolean field")),
        (_, FieldKind::Text) => Err(mismatch("a text field")),
        (_, FieldKind::TimeOfDay) => Err(mismatch("a time-of-day field")),
        (_, FieldKind::Enum(_)) => Err(mismatch("an enum field")),
        _ => Err(mismatch("not comparable to a literal")),
    }
}

fn lower_action(
    action: &ActionAst,
    resources: &BTreeMap<String, ResourceType>,
) -> Result<ActionSpec, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let Some(verb) = Verb::parse(&action.verb.value) else {
        return Err(vec![Diagnostic::error(
            diag::UNKNOWN_VERB,
            format!("unknown verb `{}`", action.verb.value),
            action.verb.span.clone(),
        )]);
    };
    let mut params: BTreeMap<String, Operand> = BTreeMap::new();
    for (key, value) in &action.params {
        let lowered = match value {
            OperandAst::Path(p) => match resolve_path_ast(p, resources) {
                Ok((fp, _)) => Some(Operand::Path(fp)),
                Err(mut e) => {
                    errors.append(&mut e);
                    None
                }
            },
            OperandAst::Literal(lit) => Some(Operand::Literal(match &lit.value {
                LiteralAst::Int(n) => Literal::Int(*n),
                LiteralAst::Bool(b) => Literal::Bool(*b),
                LiteralAst::Text(s) => Literal::Text(s.clone()),
                LiteralAst::Word(w) => Literal::EnumValue(w.clone()),
                LiteralAst::Time(t) => Literal::Time(*t),
            })),
        };
        if let Some(op) = lowered {
            params.insert(key.value.clone(), op);
        }
    }
    for required in verb.required_params() {
        if !params.contains_key(*required) {
            errors.push(Diagnostic::error(
                diag::MISSING_PARAM,
                format!(
                    "verb `{}` requires parameter `{required}`",
                    verb.name()
                ),
                action.verb.span.clone(),
            ));
        }
    }
    let mut reads = BTreeSet::new();
    let mut writes = BTreeSet::new();
    for (list, out) in [(&action.reads, &mut reads), (&action.writes, &mut writes)] {
        for ty in list.iter() {
            if !resources.contains_key(&ty.value) {
                errors.push(Diagnostic::error(
                    diag::UNKNOWN_TYPE,
                    format!("unknown resource type `{}`", ty.value),
                    ty.span.clone(),
                ));
            }
            out.insert(ty.value.clone());
        }
    }
    if errors.is_empty() {
        Ok(ActionSpec {
            name: action.name.value.clone(),
            verb,
            params,
            reads,
            writes,
        })
    } else {
        Err(errors)
    }
}
