//! Human-readable formatting for diagnostics, conflict reports, and
//! per-iteration run summaries.

use std::io::IsTerminal;
use std::sync::OnceLock;

use fairadapt_core::engine::{ConflictEdge, Severity};
use fairadapt_core::model::NodeStatus;
use fairadapt_core::trace::TraceRecord;
use fairadapt_core::world::{ActionStatus, EventKind};
use fairadapt_dsl::{DiagSeverity, Diagnostic};

/// Color is used only on a terminal and never when `FAIRADAPT_COLOR=0`.
fn use_color() -> bool {
    static ON: OnceLock<bool> = OnceLock::new();
    *ON.get_or_init(|| {
        if std::env::var("FAIRADAPT_COLOR").as_deref() == Ok("0") {
            return false;
        }
        std::io::stdout().is_terminal()
    })
}

fn paint(code: &str, text: &str) -> String {
    if use_color() {
        format!("\x1b[{code}m{text}\x1b[0m")
    } else {
        text.to_string()
    }
}

fn red(text: &str) -> String {
    paint("31", text)
}

fn green(text: &str) -> String {
    paint("32", text)
}

fn yellow(text: &str) -> String {
    paint("33", text)
}

pub fn diagnostic(d: &Diagnostic) -> String {
    let head = match d.severity {
        DiagSeverity::Error => red(&format!("error[{}]", d.code)),
        DiagSeverity::Warning => yellow(&format!("warning[{}]", d.code)),
    };
    format!("{head} {}: {}", d.span, d.message)
}

pub fn status(s: NodeStatus) -> String {
    match s {
        NodeStatus::Fulfilled => green("fulfilled"),
        NodeStatus::Violated => red("violated"),
        NodeStatus::Idle => "idle".to_string(),
        NodeStatus::ConflictExplained => yellow("conflict_explained"),
    }
}

pub fn conflict_edge(edge: &ConflictEdge) -> String {
    let severity = match edge.severity {
        Severity::Likely => red("likely"),
        Severity::Discounted => "discounted".to_string(),
    };
    let shared: Vec<&str> = edge.shared.iter().map(String::as_str).collect();
    let overlap: Vec<&str> = edge.stakeholder_overlap.iter().map(String::as_str).collect();
    format!(
        "{} <-> {} {severity} shared=[{}] stakeholders=[{}] witnesses={}",
        edge.fr_a,
        edge.fr_b,
        shared.join(", "),
        overlap.join(", "),
        edge.evidence.len()
    )
}

fn event_text(kind: &EventKind) -> String {
    match kind {
        EventKind::EnterSystem { shopper, .. } => format!("enter {shopper}"),
        EventKind::AddItem { shopper, item } => format!("add_item {shopper} {item}"),
        EventKind::RemoveItem { shopper, item } => format!("remove_item {shopper} {item}"),
        EventKind::Checkout { shopper } => format!("checkout {shopper}"),
        EventKind::StockChange { item, stock, .. } => format!("stock {item} = {stock}"),
        EventKind::InjectRequirement { fragment } => {
            let ids: Vec<&str> = fragment.requirements.keys().map(String::as_str).collect();
            format!("inject_requirement [{}]", ids.join(", "))
        }
        EventKind::RetireRequirement { fr } => format!("retire_requirement {fr}"),
    }
}

/// One block per iteration: the event, every non-idle requirement, plan
/// choices with their scores, and what actually executed.
pub fn iteration_summary(record: &TraceRecord) -> String {
    let mut out = format!("[{}] {} {}\n", record.iteration, record.time, event_text(&record.event.kind));
    if let Some(reason) = &record.event_rejected {
        out.push_str(&format!("  event rejected: {reason}\n"));
    }
    let live: Vec<String> = record
        .statuses
        .iter()
        .filter(|(_, s)| **s != NodeStatus::Idle)
        .map(|(fr, s)| format!("{fr}={}", status(*s)))
        .collect();
    if !live.is_empty() {
        out.push_str(&format!("  status: {}\n", live.join(" ")));
    }
    if !record.remediation_targets.is_empty() {
        out.push_str(&format!("  targets: {}\n", record.remediation_targets.join(", ")));
    }
    for plan in &record.plans {
        let mut line = format!(
            "  plan {}: chose {}",
            plan.target,
            plan.chosen
                .iter()
                .map(|op| format!("{op} (score {})", plan.scores.get(op).copied().unwrap_or(0)))
                .collect::<Vec<_>>()
                .join(", ")
        );
        if !plan.rejected.is_empty() {
            let rejected: Vec<String> = plan
                .rejected
                .iter()
                .map(|r| format!("{} (score {}, {})", r.operation, r.score, r.reason))
                .collect();
            line.push_str(&format!("; rejected {}", rejected.join(", ")));
        }
        out.push_str(&line);
        out.push('\n');
    }
    for action in &record.actions {
        let verdict = match &action.status {
            ActionStatus::Applied => green("applied"),
            ActionStatus::Failed(why) => red(&format!("failed ({why})")),
        };
        let bound: Vec<String> = action
            .bindings
            .iter()
            .map(|(ty, id)| format!("{ty}={id}"))
            .collect();
        out.push_str(&format!(
            "  did {} {} {verdict} [{}]\n",
            action.operation,
            action.action,
            bound.join(", ")
        ));
    }
    for skip in &record.skipped {
        out.push_str(&format!("  skipped {} ({})\n", skip.operation, skip.reason));
    }
    if record.checkout_blocked {
        out.push_str("  checkout blocked\n");
    } else if let Some(diff) = &record.checkout_diff {
        out.push_str(&format!(
            "  checkout finalised ({} changes)\n",
            diff.changed.len() + diff.deleted.len()
        ));
    }
    for err in &record.errors {
        out.push_str(&format!("  {} {err}\n", red("error:")));
    }
    out
}
