use std::fmt;

use crate::model::Loc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Error,
    Warning,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
        })
    }
}

/// Stable diagnostic codes. Tests and tools match on these, never on the
/// message text.
pub mod codes {
    pub const LEX_ERROR: &str = "lex-error";
    pub const SYNTAX_ERROR: &str = "syntax-error";
    pub const DUPLICATE_DEFINITION: &str = "duplicate-definition";
    pub const UNRESOLVED_DATABASE: &str = "unresolved-database";
    pub const UNRESOLVED_FEATURE: &str = "unresolved-feature";
    pub const FEATURE_NOT_IN_CONFIGURATION: &str = "feature-not-in-configuration";
    pub const MIXED_MODE_RELATION: &str = "mixed-mode-relation";
    pub const SELF_RELATION: &str = "self-relation";
    pub const DUPLICATE_RELATION: &str = "duplicate-relation";
    pub const SEED_CONFLICT: &str = "seed-conflict";
    pub const MISSING_CREATION_CLAUSE: &str = "missing-creation-clause";
    pub const INVALID_CREATION_TARGET: &str = "invalid-creation-target";
    pub const DUPLICATE_EVENT: &str = "duplicate-event";
    pub const UNRESOLVED_TARGET: &str = "unresolved-target";
    pub const AMBIGUOUS_TARGET: &str = "ambiguous-target";
    pub const UNRESOLVED_BEHAVIOR: &str = "unresolved-behavior";
    pub const MISSING_CONFIGURATION: &str = "missing-configuration";
    pub const METAMORPHOSIS_SELF_TARGET: &str = "metamorphosis-self-target";
    pub const UNRESOLVED_STATE: &str = "unresolved-state";
    pub const INCOHERENT_GAPROG: &str = "incoherent-gaprog";
}

/// A located message about a source file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub file: String,
    pub loc: Loc,
}

impl Diagnostic {
    pub fn error(code: &'static str, file: &str, loc: Loc, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            message: message.into(),
            file: file.to_string(),
            loc,
        }
    }

    pub fn warning(code: &'static str, file: &str, loc: Loc, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, file, loc, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// `<file>:<line>:<col>: <severity>[<code>]: <message>`
impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}:{}: {}[{}]: {}",
            self.file, self.loc.line, self.loc.col, self.severity, self.code, self.message
        )
    }
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(Diagnostic::is_error)
}
