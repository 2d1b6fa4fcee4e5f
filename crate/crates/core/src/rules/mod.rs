//! Lessons-learned rule language: `cause -> problem`, where the cause is a boolean combination
//! of factor predicates.

mod ast;
mod eval;
mod format;
mod parser;

pub use ast::{
    extract_factors, Comparator, Condition, RiskRule, RuleScope, RuleSet, Severity,
};
pub use eval::{evaluate_condition, FactorLookup, LookupFn};
pub use format::{format_condition, format_rules};
pub use parser::parse_rules;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown level `{level}` at {line}:{column}")]
    UnknownLevel {
        line: usize,
        column: usize,
        level: String,
    },
    #[error("rule `{rule}` references unknown factor `{factor}`")]
    UnknownFactor { rule: String, factor: String },
    #[error("duplicate rule id `{id}` on line {line}")]
    DuplicateRuleId { id: String, line: usize },
    #[error("no value bound for factor `{factor}`")]
    UnboundFactor { factor: String },
}

impl RuleError {
    pub fn code(&self) -> &'static str {
        match self {
            RuleError::Parse { .. } => "PARSE_ERROR",
            RuleError::UnknownLevel { .. } => "UNKNOWN_LEVEL",
            RuleError::UnknownFactor { .. } => "UNKNOWN_FACTOR",
            RuleError::DuplicateRuleId { .. } => "DUPLICATE_RULE_ID",
            RuleError::UnboundFactor { .. } => "UNBOUND_FACTOR",
        }
    }

    /// `(line, column)` for errors tied to a source position.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            RuleError::Parse { line, column, .. } | RuleError::UnknownLevel { line, column, .. } => {
                Some((*line, *column))
            }
            RuleError::DuplicateRuleId { line, .. } => Some((*line, 1)),
            _ => None,
        }
    }
}
