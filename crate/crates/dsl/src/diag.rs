//! Location-bearing diagnostics. Error codes are stable API; message texts
//! are not.
//!
//! Code ranges:
//! - `E001`–`E019` syntax errors,
//! - `E020`–`E039` resolution errors (unknown identifiers),
//! - `E040`–`E059` consistency errors (model invariants),
//! - `E060`–`E079` scenario errors,
//! - `W...` warnings.

use std::fmt;

/// 1-based position of a source region. `length` is in bytes of the
/// underlying UTF-8 text.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SourceSpan {
    pub file: String,
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DiagSeverity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: DiagSeverity,
    pub code: &'static str,
    pub message: String,
    pub span: SourceSpan,
}

impl Diagnostic {
    pub fn error(code: &'static str, message: impl Into<String>, span: SourceSpan) -> Self {
        Diagnostic {
            severity: DiagSeverity::Error,
            code,
            message: message.into(),
            span,
        }
    }

    pub fn warning(code: &'static str, message: impl Into<String>, span: SourceSpan) -> Self {
        Diagnostic {
            severity: DiagSeverity::Warning,
            code,
            message: message.into(),
            span,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.severity {
            DiagSeverity::Error => "error",
            DiagSeverity::Warning => "warning",
        };
        write!(f, "{}: {kind}[{}]: {}", self.span, self.code, self.message)
    }
}

// Syntax.
pub const UNEXPECTED_TOKEN: &str = "E001";
pub const UNEXPECTED_EOF: &str = "E002";
pub const BAD_NUMBER: &str = "E003";
pub const BAD_TIME: &str = "E004";
pub const UNKNOWN_DECL: &str = "E005";
pub const UNKNOWN_VERB: &str = "E006";
pub const UNTERMINATED_STRING: &str = "E007";
pub const BAD_CHAR: &str = "E008";
pub const UNKNOWN_KIND: &str = "E009";
pub const UNKNOWN_EVENT: &str = "E011";
pub const UNKNOWN_DAY: &str = "E012";

// Resolution.
pub const UNKNOWN_STAKEHOLDER: &str = "E020";
pub const UNKNOWN_TYPE: &str = "E021";
pub const UNKNOWN_FIELD: &str = "E022";
pub const UNKNOWN_REQUIREMENT: &str = "E023";
pub const UNKNOWN_OFR: &str = "E024";
pub const DUPLICATE_DECL: &str = "E025";
pub const NON_SCALAR_TERMINAL: &str = "E026";

// Consistency.
pub const RESOURCE_SET_MISMATCH: &str = "E040";
pub const NOT_A_FOREST: &str = "E041";
pub const LEAF_WITHOUT_OPERATION: &str = "E042";
pub const INCOMPARABLE_KINDS: &str = "E043";
pub const MISSING_PARAM: &str = "E044";
pub const EMPTY_DECOMPOSITION: &str = "E045";
pub const TIME_OUT_OF_RANGE: &str = "E046";
pub const EMPTY_RULE: &str = "E048";
pub const MODEL_INVARIANT: &str = "E049";

// Scenario.
pub const OUT_OF_ORDER: &str = "E060";
pub const UNKNOWN_INSTANCE: &str = "E061";

// Warnings.
pub const NO_DECLARATIONS: &str = "W001";
