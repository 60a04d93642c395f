//! Textual language for the fairness models and scenario timelines.
//!
//! Model files (`.frm`) declare stakeholders, resource types, the
//! requirement forest, and operations; scenario files (`.scn`) list
//! time-ordered world events, including runtime requirement injection and
//! retirement. Parsing yields either a validated
//! [`fairadapt_core::model::ModelBundle`] / event list or a list of
//! [`Diagnostic`]s whose spans point at the offending source.
//!
//! [`serialize`] emits the canonical form: sections ordered stakeholders,
//! resources, requirements, operations, each alphabetical by id;
//! `parse(serialize(b))` is structurally equal to `b`.

pub mod diag;
pub mod lexer;
pub mod lower;
pub mod parser;
pub mod scenario;
pub mod serialize;

use fairadapt_core::model::ModelBundle;
use fairadapt_core::world::Event;

pub use diag::{DiagSeverity, Diagnostic, SourceSpan};
pub use scenario::parse_scenario;
pub use serialize::serialize;

/// A successfully parsed model plus non-fatal warnings.
#[derive(Debug, Clone)]
pub struct ParsedModel {
    pub bundle: ModelBundle,
    pub warnings: Vec<Diagnostic>,
}

/// Parses and validates a model file. Errors and success are exclusive:
/// an `Err` always carries at least one error diagnostic.
pub fn parse_model(text: &str, file: &str) -> Result<ParsedModel, Vec<Diagnostic>> {
    let decls = parser::parse_decls(text, file)?;
    let (bundle, warnings) = lower::lower(&decls, file, None)?;
    Ok(ParsedModel { bundle, warnings })
}

/// Parses a model fragment whose references may resolve against an already
/// loaded bundle (used for injected requirements).
pub fn parse_model_fragment(
    text: &str,
    file: &str,
    context: &ModelBundle,
) -> Result<ParsedModel, Vec<Diagnostic>> {
    let decls = parser::parse_decls(text, file)?;
    let (bundle, warnings) = lower::lower(&decls, file, Some(context))?;
    Ok(ParsedModel { bundle, warnings })
}

/// Convenience alias so callers need not import the scenario module.
pub fn parse_events(
    text: &str,
    file: &str,
    bundle: &ModelBundle,
) -> Result<Vec<Event>, Vec<Diagnostic>> {
    parse_scenario(text, file, bundle)
}
