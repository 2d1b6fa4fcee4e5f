use std::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::model::{OrdinalLevel, LEVEL_COUNT};

use super::OptimizerError;

/// Default search-space size up to which the solver enumerates exhaustively.
pub const DEFAULT_EXHAUSTIVE_LIMIT: u64 = 100_000;

/// Relative slack under which two totals count as equal and the tie-break decides.
const TIE_TOLERANCE: f64 = 1e-10;

/// Concrete costs of one run. Exec values are already scaled by effort weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCosts {
    /// `exec[t][s]`; `None` where the site is unavailable for the task.
    pub exec: Vec<Vec<Option<f64>>>,
    pub coupled: Vec<(usize, usize)>,
    /// `comm[p][k]` for coupled pair `p` and distinct site pair `k`.
    pub comm: Vec<Vec<f64>>,
    pub sites: usize,
    pub seed: u64,
    pub run: u64,
}

fn draw<R: Rng>(rng: &mut R, probabilities: &[f64; LEVEL_COUNT]) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in probabilities.iter().enumerate() {
        if p > 0.0 {
            last = k;
            acc += p;
            if u < acc {
                return OrdinalLevel::ALL[k].image();
            }
        }
    }
    // rounding left u above the cumulative total
    OrdinalLevel::ALL[last].image()
}

impl SampledCosts {
    /// Draws every cost independently: exec cells in task-major order, then comm entries.
    pub fn sample<R: Rng>(cm: &CostModel, rng: &mut R, seed: u64, run: u64) -> Self {
        let exec = cm
            .exec
            .iter()
            .zip(&cm.effort_weights)
            .map(|(row, &effort)| {
                row.iter()
                    .map(|d| d.as_ref().map(|d| effort * draw(rng, &d.probabilities)))
                    .collect()
            })
            .collect();
        let comm = cm
            .comm
            .iter()
            .map(|row| row.iter().map(|d| draw(rng, &d.probabilities)).collect())
            .collect();
        SampledCosts {
            exec,
            coupled: cm.coupled.clone(),
            comm,
            sites: cm.sites.len(),
            seed,
            run,
        }
    }

    /// Expected-value costs; used for display and deterministic comparisons.
    pub fn expected(cm: &CostModel) -> Self {
        SampledCosts {
            exec: cm
                .exec
                .iter()
                .zip(&cm.effort_weights)
                .map(|(row, &e)| row.iter().map(|d| d.as_ref().map(|d| e * d.expectation())).collect())
                .collect(),
            coupled: cm.coupled.clone(),
            comm: cm
                .comm
                .iter()
                .map(|row| row.iter().map(|d| d.expectation()).collect())
                .collect(),
            sites: cm.sites.len(),
            seed: 0,
            run: 0,
        }
    }

    pub fn tasks(&self) -> usize {
        self.exec.len()
    }

    fn exec_at(&self, t: usize, s: usize) -> Option<f64> {
        self.exec.get(t).and_then(|r| r.get(s)).copied().flatten()
    }

    fn comm_at(&self, pair: usize, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        let k = i * (2 * self.sites - i - 1) / 2 + (j - i - 1);
        self.comm[pair][k]
    }

    /// Sites available to task `t`, in index order.
    pub fn available(&self, t: usize) -> Vec<usize> {
        (0..self.sites).filter(|&s| self.exec_at(t, s).is_some()).collect()
    }

    pub fn search_space(&self) -> u64 {
        (0..self.tasks()).fold(1u64, |acc, t| acc.saturating_mul(self.available(t).len() as u64))
    }

    /// Multiplies every cost by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.exec.iter_mut().flatten().flatten().for_each(|c| *c *= factor);
        out.comm.iter_mut().flatten().for_each(|c| *c *= factor);
        out
    }
}

/// Σ exec over tasks plus comm over coupled pairs split across sites.
pub fn total_cost(sites: &[usize], c: &SampledCosts) -> Result<f64, OptimizerError> {
    if sites.len() != c.tasks() {
        return Err(OptimizerError::InfeasibleAssignment(format!(
            "assignment covers {} of {} tasks",
            sites.len(),
            c.tasks()
        )));
    }
    let mut total = 0.0;
    for (t, &s) in sites.iter().enumerate() {
        total += c.exec_at(t, s).ok_or_else(|| {
            OptimizerError::InfeasibleAssignment(format!("task {t} cannot be placed at site {s}"))
        })?;
    }
    for (p, &(t, u)) in c.coupled.iter().enumerate() {
        total += c.comm_at(p, sites[t], sites[u]);
    }
    Ok(total)
}

/// Optimal assignment of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub sites: Vec<usize>,
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Exhaustive,
    BranchAndBound,
}

struct Search<'a> {
    c: &'a SampledCosts,
    order: Vec<usize>,
    /// Candidate sites per search depth.
    candidates: Vec<Vec<usize>>,
    /// Coupled pairs closed at each depth, as (pair, partner task).
    closing: Vec<Vec<(usize, usize)>>,
    /// Σ of minimum exec over depths `d..`.
    suffix_bound: Vec<f64>,
    prune: bool,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

fn better(cost: f64, sites: &[usize], best: &Option<(f64, Vec<usize>)>) -> bool {
    match best {
        None => true,
        Some((b, bs)) => {
            let tol = TIE_TOLERANCE * b.abs().max(cost.abs());
            if cost < b - tol {
                true
            } else if cost <= b + tol {
                sites.cmp(bs) == Ordering::Less
            } else {
                false
            }
        }
    }
}

impl Search<'_> {
    fn new(c: &SampledCosts, order: Vec<usize>, prune: bool) -> Result<Search<'_>, OptimizerError> {
        let mut candidates = Vec::with_capacity(order.len());
        for &t in &order {
            let mut sites = c.available(t);
            if sites.is_empty() {
                return Err(OptimizerError::InfeasibleProject(format!("task {t} has no available site")));
            }
            if prune {
                // cheap sites first to tighten the incumbent early
                sites.sort_by(|&a, &b| {
                    c.exec_at(t, a).unwrap().total_cmp(&c.exec_at(t, b).unwrap()).then(a.cmp(&b))
                });
            }
            candidates.push(sites);
        }
        let mut depth_of = vec![0; order.len()];
        for (d, &t) in order.iter().enumerate() {
            depth_of[t] = d;
        }
        let mut closing = vec![Vec::new(); order.len()];
        for (p, &(t, u)) in c.coupled.iter().enumerate() {
            if depth_of[t] > depth_of[u] {
                closing[depth_of[t]].push((p, u));
            } else {
                closing[depth_of[u]].push((p, t));
            }
        }
        let mut suffix_bound = vec![0.0; order.len() + 1];
        for d in (0..order.len()).rev() {
            let t = order[d];
            let min = candidates[d]
                .iter()
                .map(|&s| c.exec_at(t, s).unwrap())
                .fold(f64::INFINITY, f64::min);
            suffix_bound[d] = suffix_bound[d + 1] + min;
        }
        Ok(Search {
            c,
            current: vec![usize::MAX; order.len()],
            order,
            candidates,
            closing,
            suffix_bound,
            prune,
            best: None,
        })
    }

    fn visit(&mut self, depth: usize, partial: f64) {
        if depth == self.order.len() {
            if better(partial, &self.current, &self.best) {
                self.best = Some((partial, self.current.clone()));
            }
            return;
        }
        let t = self.order[depth];
        for i in 0..self.candidates[depth].len() {
            let s = self.candidates[depth][i];
            let mut cost = partial + self.c.exec_at(t, s).unwrap();
            for &(p, other) in &self.closing[depth] {
                cost += self.c.comm_at(p, s, self.current[other]);
            }
            if self.prune {
                if let Some((b, _)) = &self.best {
                    let bound = cost + self.suffix_bound[depth + 1];
                    if bound > b + TIE_TOLERANCE * b.abs().max(bound.abs()) {
                        continue;
                    }
                }
            }
            self.current[t] = s;
            self.visit(depth + 1, cost);
        }
        self.current[t] = usize::MAX;
    }

    fn run(mut self) -> Result<Solution, OptimizerError> {
        self.visit(0, 0.0);
        let (_, sites) = self
            .best
            .ok_or_else(|| OptimizerError::InfeasibleProject("no feasible assignment".into()))?;
        let cost = total_cost(&sites, self.c)?;
        Ok(Solution { sites, cost })
    }
}

/// Enumerates every feasible assignment in lexicographic order.
pub fn solve_exhaustive(c: &SampledCosts) -> Result<Solution, OptimizerError> {
    Search::new(c, (0..c.tasks()).collect(), false)?.run()
}

/// Depth-first branch and bound, tasks ordered by descending coupling degree, bounded below by
/// the cheapest exec of every unplaced task.
pub fn solve_branch_and_bound(c: &SampledCosts) -> Result<Solution, OptimizerError> {
    let mut degree = vec![0usize; c.tasks()];
    for &(t, u) in &c.coupled {
        degree[t] += 1;
        degree[u] += 1;
    }
    let mut order: Vec<usize> = (0..c.tasks()).collect();
    order.sort_by(|&a, &b| degree[b].cmp(&degree[a]).then(a.cmp(&b)));
    Search::new(c, order, true)?.run()
}

/// Minimum-cost assignment, exhaustive up to `exhaustive_limit` candidates.
pub fn solve_optimal(c: &SampledCosts, exhaustive_limit: u64) -> Result<(Solution, SearchMethod), OptimizerError> {
    if c.search_space() <= exhaustive_limit {
        Ok((solve_exhaustive(c)?, SearchMethod::Exhaustive))
    } else {
        Ok((solve_branch_and_bound(c)?, SearchMethod::BranchAndBound))
    }
}
