//! Line-delimited JSON trace of the adaptation loop. One record per
//! iteration, carrying the triggering event verbatim so a trace can be
//! replayed through a fresh engine.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{ConflictEdge, Plan, RuleEvaluation, SkippedAction};
use crate::model::{FrId, NodeStatus};
use crate::world::{ActionOutcome, Event, Timestamp, WorldDiff};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub time: Timestamp,
    pub event: Event,
    /// Set when the event was not applied (e.g. a redirected shopper).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_rejected: Option<String>,
    /// World changes caused by the event itself.
    #[serde(default, skip_serializing_if = "WorldDiff::is_empty")]
    pub event_diff: WorldDiff,
    pub evaluations: Vec<RuleEvaluation>,
    pub statuses: BTreeMap<FrId, NodeStatus>,
    pub conflicts: Vec<ConflictEdge>,
    pub remediation_targets: Vec<FrId>,
    pub plans: Vec<Plan>,
    pub actions: Vec<ActionOutcome>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<SkippedAction>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub checkout_blocked: bool,
    /// World changes from finalising a checkout, after adaptation ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkout_diff: Option<WorldDiff>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl TraceRecord {
    pub fn new(iteration: usize, event: Event) -> Self {
        TraceRecord {
            iteration,
            time: event.time,
            event,
            event_rejected: None,
            event_diff: WorldDiff::default(),
            evaluations: vec![],
            statuses: BTreeMap::new(),
            conflicts: vec![],
            remediation_targets: vec![],
            plans: vec![],
            actions: vec![],
            skipped: vec![],
            checkout_blocked: false,
            checkout_diff: None,
            errors: vec![],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdaptationTrace {
    pub records: Vec<TraceRecord>,
}

impl AdaptationTrace {
    /// One JSON object per line, in iteration order, with a trailing
    /// newline. Map keys are sorted, so equal traces serialise
    /// byte-identically.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for record in &self.records {
            out.push_str(&serde_json::to_string(record).expect("trace records serialise"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self, serde_json::Error> {
        let mut records = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(line)?);
        }
        Ok(AdaptationTrace { records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::supermarket_bundle;
    use crate::world::{Day, EventKind, FieldValue, WorldState};

    fn tiny_trace() -> AdaptationTrace {
        let bundle = supermarket_bundle();
        let mut world = WorldState::default();
        let timeline = vec![
            Event {
                time: Timestamp { day: Day::Mon, minutes: 8 * 60 },
                kind: EventKind::StockChange {
                    item: "it1".into(),
                    stock: 10,
                    fields: BTreeMap::new(),
                },
            },
            Event {
                time: Timestamp { day: Day::Mon, minutes: 9 * 60 },
                kind: EventKind::EnterSystem {
                    shopper: "sh1".into(),
                    fields: BTreeMap::from([("age".to_string(), FieldValue::Int(40))]),
                },
            },
            Event {
                time: Timestamp { day: Day::Mon, minutes: 9 * 60 + 30 },
                kind: EventKind::AddItem { shopper: "sh1".into(), item: "it1".into() },
            },
        ];
        let (trace, final_world, _) = crate::engine::run(&timeline, bundle, world.clone());
        // Replaying through a fresh engine is deterministic.
        world = WorldState::default();
        let (again, world2, _) =
            crate::engine::run(&timeline, supermarket_bundle(), world);
        assert_eq!(trace, again);
        assert_eq!(final_world, world2);
        trace
    }

    #[test]
    fn ndjson_round_trip_is_identity() {
        let trace = tiny_trace();
        let text = trace.to_ndjson();
        assert_eq!(text.lines().count(), trace.records.len());
        let back = AdaptationTrace::from_ndjson(&text).unwrap();
        assert_eq!(back, trace);
        assert_eq!(back.to_ndjson(), text);
    }

    #[test]
    fn records_carry_iteration_and_time() {
        let trace = tiny_trace();
        for (i, record) in trace.records.iter().enumerate() {
            assert_eq!(record.iteration, i);
            assert_eq!(record.time, record.event.time);
        }
    }
}
