//! Exact inference by variable elimination.
//!
//! Variables not among the ancestors of the query and evidence are barren and are dropped
//! before elimination; their tables sum to one and cannot change the result.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{OrdinalLevel, LEVEL_COUNT};

use super::cpt::StateDistribution;
use super::network::BayesianNetwork;
use super::BayesError;

pub type Evidence = BTreeMap<String, OrdinalLevel>;

const NORMALIZATION_FLOOR: f64 = 1e-300;

/// Marginal distributions keyed by variable id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub marginals: BTreeMap<String, StateDistribution>,
}

impl Posterior {
    pub fn get(&self, id: &str) -> Option<&StateDistribution> {
        self.marginals.get(id)
    }

    /// Expected numeric image of a variable's marginal.
    pub fn expectation(&self, id: &str) -> Option<f64> {
        self.get(id).map(|p| {
            p.iter()
                .zip(OrdinalLevel::ALL)
                .map(|(prob, level)| prob * level.image())
                .sum()
        })
    }
}

/// Table over a sorted set of variables; the first variable is the most significant digit.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factor {
    vars: Vec<usize>,
    values: Vec<f64>,
}

impl Factor {
    fn scalar(value: f64) -> Self {
        Factor {
            vars: vec![],
            values: vec![value],
        }
    }

    fn digit(index: usize, position: usize, arity: usize) -> usize {
        (index / LEVEL_COUNT.pow((arity - 1 - position) as u32)) % LEVEL_COUNT
    }

    /// Factor `P(child | parents)` from the table of `child`.
    fn from_cpt(net: &BayesianNetwork, child: usize) -> Self {
        let parents = net.parent_indices(child);
        let cpt = &net.cpts[child];
        let mut scope: Vec<usize> = parents.to_vec();
        scope.push(child);
        let mut vars = scope.clone();
        vars.sort_unstable();
        let position: Vec<usize> = scope
            .iter()
            .map(|v| vars.binary_search(v).unwrap())
            .collect();
        let size = LEVEL_COUNT.pow(vars.len() as u32);
        let mut values = vec![0.0; size];
        for (i, slot) in values.iter_mut().enumerate() {
            let mut row = 0;
            for &pos in &position[..parents.len()] {
                row = row * LEVEL_COUNT + Self::digit(i, pos, vars.len());
            }
            let state = Self::digit(i, position[parents.len()], vars.len());
            *slot = cpt.rows[row][state];
        }
        Factor { vars, values }
    }

    fn contains(&self, var: usize) -> bool {
        self.vars.binary_search(&var).is_ok()
    }

    fn restrict(&self, var: usize, state: usize) -> Self {
        let Ok(pos) = self.vars.binary_search(&var) else {
            return self.clone();
        };
        let arity = self.vars.len();
        let mut vars = self.vars.clone();
        vars.remove(pos);
        let values = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| Self::digit(*i, pos, arity) == state)
            .map(|(_, v)| *v)
            .collect();
        Factor { vars, values }
    }

    fn product(&self, other: &Factor) -> Self {
        let mut vars: Vec<usize> = self.vars.iter().chain(&other.vars).copied().collect();
        vars.sort_unstable();
        vars.dedup();
        let strides = |f: &Factor| -> Vec<usize> {
            vars.iter()
                .map(|v| match f.vars.binary_search(v) {
                    Ok(p) => LEVEL_COUNT.pow((f.vars.len() - 1 - p) as u32),
                    Err(_) => 0,
                })
                .collect()
        };
        let (sa, sb) = (strides(self), strides(other));
        let size = LEVEL_COUNT.pow(vars.len() as u32);
        let mut values = Vec::with_capacity(size);
        let mut digits = vec![0usize; vars.len()];
        let (mut ia, mut ib) = (0usize, 0usize);
        for _ in 0..size {
            values.push(self.values[ia] * other.values[ib]);
            // odometer increment, least significant digit last
            for d in (0..vars.len()).rev() {
                digits[d] += 1;
                ia += sa[d];
                ib += sb[d];
                if digits[d] < LEVEL_COUNT {
                    break;
                }
                digits[d] = 0;
                ia -= sa[d] * LEVEL_COUNT;
                ib -= sb[d] * LEVEL_COUNT;
            }
        }
        Factor { vars, values }
    }

    fn sum_out(&self, var: usize) -> Self {
        let Ok(pos) = self.vars.binary_search(&var) else {
            return self.clone();
        };
        let arity = self.vars.len();
        let mut vars = self.vars.clone();
        vars.remove(pos);
        let inner = LEVEL_COUNT.pow((arity - 1 - pos) as u32);
        let mut values = vec![0.0; self.values.len() / LEVEL_COUNT];
        for (i, v) in self.values.iter().enumerate() {
            let high = i / (inner * LEVEL_COUNT);
            let low = i % inner;
            values[high * inner + low] += v;
        }
        Factor { vars, values }
    }
}

fn resolve_evidence(
    net: &BayesianNetwork,
    evidence: &Evidence,
) -> Result<Vec<Option<usize>>, BayesError> {
    let mut states = vec![None; net.len()];
    for (id, level) in evidence {
        let v = net
            .index_of(id)
            .ok_or_else(|| BayesError::UnknownVariable(id.clone()))?;
        states[v] = Some(level.index());
    }
    Ok(states)
}

/// Greedy order: repeatedly eliminate the variable whose combined factor is smallest.
fn greedy_order(factors: &[Factor], mut pending: Vec<usize>) -> Vec<usize> {
    let mut scopes: Vec<Vec<usize>> = factors.iter().map(|f| f.vars.clone()).collect();
    let mut order = Vec::with_capacity(pending.len());
    while !pending.is_empty() {
        let cost = |v: usize| {
            let mut union: Vec<usize> = scopes
                .iter()
                .filter(|s| s.contains(&v))
                .flatten()
                .copied()
                .collect();
            union.sort_unstable();
            union.dedup();
            union.len()
        };
        let (pick, _) = pending
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| (cost(v), v))
            .map(|(i, &v)| (i, v))
            .unwrap();
        let v = pending.swap_remove(pick);
        let mut merged: Vec<usize> = Vec::new();
        scopes.retain(|s| {
            if s.contains(&v) {
                merged.extend(s.iter().copied().filter(|&x| x != v));
                false
            } else {
                true
            }
        });
        merged.sort_unstable();
        merged.dedup();
        scopes.push(merged);
        order.push(v);
    }
    order
}

fn marginal(
    net: &BayesianNetwork,
    states: &[Option<usize>],
    query: usize,
    order: Option<&[usize]>,
) -> Result<StateDistribution, BayesError> {
    if let Some(s) = states[query] {
        let mut point = [0.0; LEVEL_COUNT];
        point[s] = 1.0;
        // still reject impossible evidence
        let keep = net.ancestors_of(states.iter().enumerate().filter_map(|(v, s)| s.map(|_| v)));
        let z = eliminate(net, states, &keep, None, order)?.values[0];
        if z <= NORMALIZATION_FLOOR {
            return Err(BayesError::InconsistentEvidence);
        }
        return Ok(point);
    }
    let keep = net.ancestors_of(
        std::iter::once(query).chain(states.iter().enumerate().filter_map(|(v, s)| s.map(|_| v))),
    );
    let f = eliminate(net, states, &keep, Some(query), order)?;
    let z: f64 = f.values.iter().sum();
    if z <= NORMALIZATION_FLOOR {
        return Err(BayesError::InconsistentEvidence);
    }
    let mut out = [0.0; LEVEL_COUNT];
    for (slot, v) in out.iter_mut().zip(&f.values) {
        *slot = v / z;
    }
    Ok(out)
}

/// Multiplies the relevant tables, restricts evidence and sums out every other variable.
fn eliminate(
    net: &BayesianNetwork,
    states: &[Option<usize>],
    keep: &[bool],
    query: Option<usize>,
    order: Option<&[usize]>,
) -> Result<Factor, BayesError> {
    let mut factors: Vec<Factor> = (0..net.len())
        .filter(|&v| keep[v])
        .map(|v| {
            let mut f = Factor::from_cpt(net, v);
            for (e, s) in states.iter().enumerate() {
                if let Some(s) = s {
                    if f.contains(e) {
                        f = f.restrict(e, *s);
                    }
                }
            }
            f
        })
        .collect();
    let hidden: Vec<usize> = (0..net.len())
        .filter(|&v| keep[v] && states[v].is_none() && Some(v) != query)
        .collect();
    let order: Vec<usize> = match order {
        Some(o) => {
            let filtered: Vec<usize> = o.iter().copied().filter(|v| hidden.contains(v)).collect();
            if filtered.len() != hidden.len() {
                return Err(BayesError::IncompleteOrder);
            }
            filtered
        }
        None => greedy_order(&factors, hidden),
    };
    for v in order {
        let (with, without): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.contains(v));
        factors = without;
        if let Some(joined) = with.into_iter().reduce(|a, b| a.product(&b)) {
            factors.push(joined.sum_out(v));
        }
    }
    Ok(factors
        .into_iter()
        .fold(Factor::scalar(1.0), |acc, f| acc.product(&f)))
}

/// Exact marginals of every variable; evidence variables get point masses.
pub fn infer_posterior(net: &BayesianNetwork, evidence: &Evidence) -> Result<Posterior, BayesError> {
    let ids: Vec<&str> = net.variables.iter().map(|v| v.id.as_str()).collect();
    infer_marginals(net, evidence, &ids)
}

/// Exact marginals of the queried variables only.
pub fn infer_marginals(
    net: &BayesianNetwork,
    evidence: &Evidence,
    query: &[&str],
) -> Result<Posterior, BayesError> {
    infer_with_order(net, evidence, query, None)
}

/// As [`infer_marginals`] with an explicit elimination order over variable indices. The order
/// must mention every variable that ends up eliminated; extra entries are ignored.
pub fn infer_with_order(
    net: &BayesianNetwork,
    evidence: &Evidence,
    query: &[&str],
    order: Option<&[usize]>,
) -> Result<Posterior, BayesError> {
    let states = resolve_evidence(net, evidence)?;
    let mut marginals = BTreeMap::new();
    for id in query {
        let q = net
            .index_of(id)
            .ok_or_else(|| BayesError::UnknownVariable(id.to_string()))?;
        marginals.insert(id.to_string(), marginal(net, &states, q, order)?);
    }
    Ok(Posterior { marginals })
}
