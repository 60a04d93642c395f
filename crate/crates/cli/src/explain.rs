//! `fairadapt explain`: reconstructs why one requirement ended up with its
//! recorded status at one iteration, purely from the trace plus the model
//! the run started from.

use std::collections::BTreeSet;
use std::path::Path;

use fairadapt_core::model::{ModelBundle, NodeStatus};
use fairadapt_core::trace::TraceRecord;
use fairadapt_core::world::{ActionStatus, EventKind};

use crate::render;

pub fn cmd_explain(trace_path: &Path, model_path: &Path, fr: &str, iteration: usize) -> u8 {
    let trace = match crate::load_trace(trace_path) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let parsed = match crate::load_model(model_path) {
        Ok(p) => p,
        Err(code) => return code,
    };

    let Some(record) = trace.records.iter().find(|r| r.iteration == iteration) else {
        eprintln!(
            "error: iteration {iteration} is not in the trace (it has {} iterations)",
            trace.records.len()
        );
        return 1;
    };
    let bundle = bundle_at(parsed.bundle, &trace.records, iteration);

    let Some(status) = record.statuses.get(fr) else {
        let known: Vec<&str> = record.statuses.keys().map(String::as_str).collect();
        eprintln!("error: unknown requirement `{fr}`; this iteration tracked: {}", known.join(", "));
        return 1;
    };

    println!(
        "{fr} at iteration {iteration} ({} {}): {}",
        record.time,
        event_kind_name(&record.event.kind),
        render::status(*status)
    );
    if let Some(decl) = bundle.requirements.get(fr) {
        println!("  \"{}\" (specified by {}, priority {})", decl.description, decl.specified_by, decl.priority);
    }

    let ops = subtree_operations(&bundle, fr);
    let evaluated: Vec<_> = record
        .evaluations
        .iter()
        .filter(|e| ops.contains(e.operation.as_str()))
        .collect();
    if evaluated.is_empty() {
        println!("  no rule bound this iteration");
    }
    for eval in &evaluated {
        let bound: Vec<String> = eval.bindings.iter().map(|(ty, id)| format!("{ty}={id}")).collect();
        println!(
            "  rule {} = {} [{}]",
            eval.operation,
            eval.result,
            bound.join(", ")
        );
    }
    for plan in record.plans.iter().filter(|p| p.target == fr) {
        println!("  planned: chose {}", plan.chosen.join(", "));
        for rejected in &plan.rejected {
            println!(
                "    rejected {} (score {}, {})",
                rejected.operation, rejected.score, rejected.reason
            );
        }
    }
    for action in record.actions.iter().filter(|a| ops.contains(a.operation.as_str())) {
        let verdict = match &action.status {
            ActionStatus::Applied => "applied".to_string(),
            ActionStatus::Failed(why) => format!("failed ({why})"),
        };
        println!("  action {} {} {verdict}", action.operation, action.action);
    }
    for skip in record.skipped.iter().filter(|s| ops.contains(s.operation.as_str())) {
        println!("  skipped {} ({})", skip.operation, skip.reason);
    }

    if *status == NodeStatus::ConflictExplained {
        let own_priority = bundle.requirements.get(fr).map(|d| d.priority);
        for edge in &record.conflicts {
            let other = if edge.fr_a == fr {
                &edge.fr_b
            } else if edge.fr_b == fr {
                &edge.fr_a
            } else {
                continue;
            };
            if record.statuses.get(other) != Some(&NodeStatus::Fulfilled) {
                continue;
            }
            let shared: Vec<&str> = edge.shared.iter().map(String::as_str).collect();
            let priority = bundle
                .requirements
                .get(other)
                .map(|d| d.priority.to_string())
                .unwrap_or_else(|| "?".into());
            println!(
                "  explained by {other} (priority {priority}{}) — {:?} conflict over [{}]",
                own_priority.map(|p| format!(" vs our {p}")).unwrap_or_default(),
                edge.severity,
                shared.join(", ")
            );
        }
    }
    0
}

/// The bundle the engine was using *during* `iteration`: injections and
/// retirements take effect at the following iteration boundary, so only
/// strictly earlier records contribute.
fn bundle_at(base: ModelBundle, records: &[TraceRecord], iteration: usize) -> ModelBundle {
    let mut bundle = base;
    for record in records.iter().filter(|r| r.iteration < iteration) {
        match &record.event.kind {
            EventKind::InjectRequirement { fragment } if record.errors.is_empty() => {
                bundle = bundle.merged_with(fragment);
            }
            EventKind::RetireRequirement { fr } if record.errors.is_empty() => {
                bundle = bundle.without_requirement(fr);
            }
            _ => {}
        }
    }
    bundle
}

fn event_kind_name(kind: &EventKind) -> &'static str {
    match kind {
        EventKind::EnterSystem { .. } => "enter",
        EventKind::AddItem { .. } => "add_item",
        EventKind::RemoveItem { .. } => "remove_item",
        EventKind::Checkout { .. } => "checkout",
        EventKind::StockChange { .. } => "stock",
        EventKind::InjectRequirement { .. } => "inject_requirement",
        EventKind::RetireRequirement { .. } => "retire_requirement",
    }
}

/// Ids of every operation under the requirement's subtree.
fn subtree_operations<'a>(bundle: &'a ModelBundle, fr: &str) -> BTreeSet<&'a str> {
    let mut ops = BTreeSet::new();
    let mut stack = vec![fr.to_string()];
    while let Some(cur) = stack.pop() {
        let Some(decl) = bundle.requirements.get(&cur) else {
            continue;
        };
        stack.extend(decl.children.iter().cloned());
        if let Some(ofr) = &decl.ofr {
            for op in bundle.operations.values() {
                if &op.ofr == ofr {
                    ops.insert(op.id.as_str());
                }
            }
        }
    }
    ops
}
