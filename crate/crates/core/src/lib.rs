//! Runtime models and adaptation engine for stakeholder-specified fairness
//! policies over shared resources.
//!
//! The crate is organised around three models that stay alive at runtime and
//! act as the knowledge base of a MAPE-K loop:
//!
//! - the requirement forest (AND/OR goal decomposition down to operational
//!   leaves), in [`model`],
//! - the operationalisation model (operations with read/write links to
//!   resource types), also in [`model`],
//! - the resource model plus its live instances (the simulated shop world),
//!   in [`world`].
//!
//! [`query`] holds the pure analyses over these models (satisfaction
//! propagation, resource reachability, goal-tree relations), [`engine`] the
//! Monitor/Analyse/Plan/Execute steps, and [`trace`] the line-delimited JSON
//! record of every loop iteration.
//!
//! With the default `parallel` feature the pairwise conflict scan in
//! [`engine::detect_conflicts`] runs on rayon; disabling the feature selects
//! a sequential scan with identical output.

pub mod engine;
pub mod fixtures;
pub mod model;
pub mod query;
pub mod trace;
pub mod world;

pub use engine::{
    detect_conflicts, AnalysisOutcome, ConflictEdge, EngineState, Plan, RuleEvaluation, Severity,
};
pub use model::{
    Access, ActionSpec, Condition, Decomposition, FairnessRequirement, FieldKind, FieldPath,
    Literal, ModelBundle, ModelError, NodeStatus, Operand, Operation, OperationalRequirement,
    Policy, ResourceType, Rule, Stakeholder, StakeholderKind, Verb,
};
pub use query::{affected_overlap, propagate_satisfaction, relation, resources_of, Relation};
pub use trace::{AdaptationTrace, TraceRecord};
pub use world::{Day, Event, EventKind, FieldValue, Timestamp, WorldState};
