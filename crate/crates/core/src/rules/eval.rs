use std::collections::{BTreeMap, HashMap};

use crate::model::{FactorValue, OrdinalLevel};

use super::ast::Condition;
use super::RuleError;

/// Supplies candidate values for a factor in some evaluation context.
///
/// A predicate holds when it holds for at least one candidate, which is how pair bindings
/// expose single-entity factors of either member. `None` means the factor is unbound.
pub trait FactorLookup {
    fn candidates(&self, factor: &str) -> Option<Vec<FactorValue>>;
}

impl FactorLookup for HashMap<String, FactorValue> {
    fn candidates(&self, factor: &str) -> Option<Vec<FactorValue>> {
        self.get(factor).map(|v| vec![*v])
    }
}

impl FactorLookup for BTreeMap<String, FactorValue> {
    fn candidates(&self, factor: &str) -> Option<Vec<FactorValue>> {
        self.get(factor).map(|v| vec![*v])
    }
}

/// Adapts a closure into a [`FactorLookup`].
pub struct LookupFn<F>(pub F);

impl<F: Fn(&str) -> Option<Vec<FactorValue>>> FactorLookup for LookupFn<F> {
    fn candidates(&self, factor: &str) -> Option<Vec<FactorValue>> {
        (self.0)(factor)
    }
}

/// Bare factors: booleans by truth, ordinals by `>= high`.
fn bare_truth(value: FactorValue) -> bool {
    match value {
        FactorValue::Bool(b) => b,
        FactorValue::Level(l) => l >= OrdinalLevel::High,
    }
}

/// Evaluates every subterm (no short-circuit), so unbound factors are reported regardless of
/// the values of their siblings.
pub fn evaluate_condition(cond: &Condition, lookup: &impl FactorLookup) -> Result<bool, RuleError> {
    let values = |factor: &str| {
        lookup
            .candidates(factor)
            .ok_or_else(|| RuleError::UnboundFactor {
                factor: factor.to_string(),
            })
    };
    Ok(match cond {
        Condition::Factor(id) => values(id)?.into_iter().any(bare_truth),
        Condition::Predicate {
            factor,
            comparator,
            level,
        } => values(factor)?
            .into_iter()
            .any(|v| comparator.holds(v.image(), level.image())),
        Condition::Not(inner) => !evaluate_condition(inner, lookup)?,
        Condition::And(children) => {
            let mut all = true;
            for c in children {
                all &= evaluate_condition(c, lookup)?;
            }
            all
        }
        Condition::Or(children) => {
            let mut any = false;
            for c in children {
                any |= evaluate_condition(c, lookup)?;
            }
            any
        }
    })
}
