//! Diagnostics shared by the parser, the well-formedness checker and the
//! refactoring engine.
//!
//! Diagnostics never abort processing: every pass collects all violations it
//! can see, in document order, and returns them as a list.

use std::fmt;

/// Diagnostic severity. Almost everything the checkers report is an error;
/// warnings are reserved for advisory findings (obsolete tests, vacuous
/// verification).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Severity::Error => write!(f, "error"),
            Severity::Warning => write!(f, "warning"),
        }
    }
}

/// A single finding, pointing into the originating source unit.
///
/// `line`/`column` are 1-based. Diagnostics produced from models that were
/// built programmatically (not parsed) carry position 0,0 and no path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub severity: Severity,
    pub path: Option<String>,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl Diagnostic {
    pub fn error(code: &'static str, line: u32, column: u32, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Error,
            path: None,
            line,
            column,
            message: message.into(),
        }
    }

    pub fn warning(code: &'static str, line: u32, column: u32, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            severity: Severity::Warning,
            path: None,
            line,
            column,
            message: message.into(),
        }
    }

    pub fn with_path(mut self, path: impl Into<String>) -> Self {
        self.path = Some(path.into());
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(p) => write!(
                f,
                "{}:{}:{}: {} {} {}",
                p, self.line, self.column, self.severity, self.code, self.message
            ),
            None => write!(
                f,
                "{}:{}: {} {} {}",
                self.line, self.column, self.severity, self.code, self.message
            ),
        }
    }
}

/// Renders a diagnostic list one finding per line, in the order given.
pub fn render_diagnostics(diags: &[Diagnostic]) -> String {
    let mut out = String::new();
    for d in diags {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}

/// Diagnostic codes. Grouped by the pass that produces them; several codes
/// are shared (the refactoring engine reuses checker codes for conditions
/// that mirror static semantics).
pub mod codes {
    // Syntax and project assembly.
    pub const E_SYNTAX: &str = "E_SYNTAX";
    pub const E_DUPLICATE: &str = "E_DUPLICATE";

    // Well-formedness.
    pub const E_DUP_NAME: &str = "E_DUP_NAME";
    pub const E_INHERIT_CYCLE: &str = "E_INHERIT_CYCLE";
    pub const E_UNKNOWN_CLASS: &str = "E_UNKNOWN_CLASS";
    pub const E_RESERVED_NAME: &str = "E_RESERVED_NAME";
    pub const E_SET_OF_PRIMITIVE: &str = "E_SET_OF_PRIMITIVE";
    pub const E_ATTR_SHADOW: &str = "E_ATTR_SHADOW";
    pub const E_OVERRIDE_MISMATCH: &str = "E_OVERRIDE_MISMATCH";
    pub const E_ABSTRACT_BODY: &str = "E_ABSTRACT_BODY";
    pub const E_ABSTRACT_UNIMPLEMENTED: &str = "E_ABSTRACT_UNIMPLEMENTED";
    pub const E_CHART_CONFLICT: &str = "E_CHART_CONFLICT";
    pub const E_UNKNOWN_STATE: &str = "E_UNKNOWN_STATE";
    pub const E_UNKNOWN_TRIGGER: &str = "E_UNKNOWN_TRIGGER";
    pub const E_TRIGGER_HAS_BODY: &str = "E_TRIGGER_HAS_BODY";
    pub const E_TRIGGER_ABSTRACT: &str = "E_TRIGGER_ABSTRACT";
    pub const E_TRIGGER_ARITY: &str = "E_TRIGGER_ARITY";
    pub const E_RETURN_IN_ACTIONS: &str = "E_RETURN_IN_ACTIONS";
    pub const E_MISSING_RETURN: &str = "E_MISSING_RETURN";
    pub const E_TYPE: &str = "E_TYPE";
    pub const E_UNKNOWN_MEMBER: &str = "E_UNKNOWN_MEMBER";
    pub const E_UNKNOWN_ATTR: &str = "E_UNKNOWN_ATTR";
    pub const E_UNKNOWN_OBJECT: &str = "E_UNKNOWN_OBJECT";
    pub const E_VALUE_TYPE: &str = "E_VALUE_TYPE";
    pub const E_DUP_ASSIGN: &str = "E_DUP_ASSIGN";
    pub const E_DUP_SET_ELEM: &str = "E_DUP_SET_ELEM";
    pub const E_ABSTRACT_INSTANTIATION: &str = "E_ABSTRACT_INSTANTIATION";
    pub const E_UNKNOWN_FIXTURE: &str = "E_UNKNOWN_FIXTURE";
    pub const E_UNKNOWN_DRIVER: &str = "E_UNKNOWN_DRIVER";
    pub const E_UNKNOWN_PATTERN: &str = "E_UNKNOWN_PATTERN";
    pub const E_ACCEPTANCE_UNPUBLISHED: &str = "E_ACCEPTANCE_UNPUBLISHED";
    pub const E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS: &str =
        "E_PUBLISHED_MEMBER_IN_UNPUBLISHED_CLASS";

    // Evaluation / runtime.
    pub const E_NAV_UNSET: &str = "E_NAV_UNSET";
    pub const E_OVERFLOW: &str = "E_OVERFLOW";
    pub const E_UNBOUND_NAME: &str = "E_UNBOUND_NAME";
    pub const E_SELF_REBOUND: &str = "E_SELF_REBOUND";
    pub const E_NONDETERMINISM: &str = "E_NONDETERMINISM";
    pub const E_NO_TRANSITION: &str = "E_NO_TRANSITION";
    pub const E_NO_BEHAVIOR: &str = "E_NO_BEHAVIOR";
    pub const E_BUDGET: &str = "E_BUDGET";
    pub const E_EVAL: &str = "E_EVAL";

    // Test kit.
    pub const E_ANCHOR_UNKNOWN: &str = "E_ANCHOR_UNKNOWN";

    // Statechart test derivation.
    pub const E_EXPLOSION: &str = "E_EXPLOSION";

    // Refactoring engine.
    pub const E_UNKNOWN_RULE: &str = "E_UNKNOWN_RULE";
    pub const E_NAME_CLASH: &str = "E_NAME_CLASH";
    pub const E_SAME_NAME: &str = "E_SAME_NAME";
    pub const E_NOT_DECLARED: &str = "E_NOT_DECLARED";
    pub const E_SUBCLASS_ATTR_USE: &str = "E_SUBCLASS_ATTR_USE";
    pub const E_BODIES_DIFFER: &str = "E_BODIES_DIFFER";
    pub const E_ABSTRACT_INSTANCES: &str = "E_ABSTRACT_INSTANCES";
    pub const E_PUBLISHED_IMPACT: &str = "E_PUBLISHED_IMPACT";
    pub const E_UNKNOWN_DONOR: &str = "E_UNKNOWN_DONOR";
    pub const W_OBSOLETE: &str = "W_OBSOLETE";
    pub const W_NO_OBSERVERS: &str = "W_NO_OBSERVERS";

    // Code generation.
    pub const E_TEMPLATE: &str = "E_TEMPLATE";
}
