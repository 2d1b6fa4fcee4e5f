use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{FactorCatalog, FactorScope, OrdinalLevel, Sign};

use super::RuleError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "==")]
    Equal,
}

impl Comparator {
    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::AtLeast => ">=",
            Comparator::AtMost => "<=",
            Comparator::Equal => "==",
        }
    }

    pub fn holds(self, value: f64, literal: f64) -> bool {
        const EPS: f64 = 1e-12;
        match self {
            Comparator::AtLeast => value >= literal - EPS,
            Comparator::AtMost => value <= literal + EPS,
            Comparator::Equal => (value - literal).abs() <= EPS,
        }
    }
}

/// Boolean condition over factor predicates. `And`/`Or` hold at least two children.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Predicate {
        factor: String,
        comparator: Comparator,
        level: OrdinalLevel,
    },
    /// Bare factor name: truth for booleans, `>= high` for ordinals.
    Factor(String),
    Not(Box<Condition>),
    And(Vec<Condition>),
    Or(Vec<Condition>),
}

impl Condition {
    pub fn factor(id: impl Into<String>) -> Self {
        Condition::Factor(id.into())
    }

    pub fn predicate(id: impl Into<String>, comparator: Comparator, level: OrdinalLevel) -> Self {
        Condition::Predicate {
            factor: id.into(),
            comparator,
            level,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Condition) -> Self {
        Condition::Not(Box::new(inner))
    }

    /// Visits every factor occurrence together with its effective direction: negation and `<=`
    /// comparisons each flip the direction.
    pub fn visit_occurrences(&self, f: &mut impl FnMut(&str, Sign)) {
        fn walk(c: &Condition, sign: Sign, f: &mut impl FnMut(&str, Sign)) {
            match c {
                Condition::Factor(id) => f(id, sign),
                Condition::Predicate {
                    factor, comparator, ..
                } => {
                    let s = if *comparator == Comparator::AtMost {
                        sign.flip()
                    } else {
                        sign
                    };
                    f(factor, s)
                }
                Condition::Not(inner) => walk(inner, sign.flip(), f),
                Condition::And(cs) | Condition::Or(cs) => {
                    for child in cs {
                        walk(child, sign, f);
                    }
                }
            }
        }
        walk(self, Sign::Positive, f)
    }

    pub fn factors(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_occurrences(&mut |id, _| {
            out.insert(id.to_string());
        });
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
        }
    }
}

impl Default for Severity {
    fn default() -> Self {
        Severity::Medium
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(Severity::Low),
            "medium" => Ok(Severity::Medium),
            "high" => Ok(Severity::High),
            other => Err(format!("unknown severity `{other}`")),
        }
    }
}

/// Binding scope a rule is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleScope {
    Project,
    Task,
    Site,
    TaskSite,
    /// Pair of distinct sites exchanging coupled work.
    SitePair,
}

impl RuleScope {
    fn of_factor(scope: FactorScope) -> Self {
        match scope {
            FactorScope::Project => RuleScope::Project,
            FactorScope::Task => RuleScope::Task,
            FactorScope::Site => RuleScope::Site,
            FactorScope::TaskSite => RuleScope::TaskSite,
            FactorScope::TaskPair | FactorScope::SitePair => RuleScope::SitePair,
        }
    }

    /// Least scope covering both.
    pub fn join(self, other: Self) -> Self {
        use RuleScope::*;
        match (self, other) {
            (SitePair, _) | (_, SitePair) => SitePair,
            (Project, x) | (x, Project) => x,
            (a, b) if a == b => a,
            _ => TaskSite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiskRule {
    pub id: String,
    pub condition: Condition,
    pub problem: String,
    #[serde(default)]
    pub severity: Severity,
}

impl RiskRule {
    /// Widest scope among the referenced factors; fails on factors missing from the catalog.
    pub fn scope(&self, catalog: &FactorCatalog) -> Result<RuleScope, RuleError> {
        let mut scope = RuleScope::Project;
        for factor in self.condition.factors() {
            let def = catalog.get(&factor).ok_or_else(|| RuleError::UnknownFactor {
                rule: self.id.clone(),
                factor: factor.clone(),
            })?;
            scope = scope.join(RuleScope::of_factor(def.scope));
        }
        Ok(scope)
    }
}

/// Parsed rule file. Equality is structural over the rules; source text is not compared.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RuleSet {
    pub rules: Vec<RiskRule>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
}

impl PartialEq for RuleSet {
    fn eq(&self, other: &Self) -> bool {
        self.rules == other.rules
    }
}

impl RuleSet {
    pub fn new(rules: Vec<RiskRule>) -> Self {
        RuleSet {
            rules,
            source: String::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    /// Checks every referenced factor against the catalog and derives per-rule scopes.
    pub fn link(&self, catalog: &FactorCatalog) -> Result<Vec<RuleScope>, RuleError> {
        self.rules.iter().map(|r| r.scope(catalog)).collect()
    }
}

/// Exact set of factor ids syntactically present in any rule condition.
pub fn extract_factors(rules: &RuleSet) -> BTreeSet<String> {
    rules
        .rules
        .iter()
        .flat_map(|r| r.condition.factors())
        .collect()
}
