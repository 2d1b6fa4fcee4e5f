//! Execution and communication cost distributions inferred from the network.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{infer_marginals, BayesError, BayesianNetwork, Evidence, Posterior, StateDistribution};
use crate::model::{
    check_goal_weights, validate_characterization, Binding, CausalModel, CouplingRule,
    Finding, OrdinalLevel, Polarity, ProjectCharacterization, LEVEL_COUNT,
};

const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("characterization is invalid ({} finding(s))", .0.len())]
    InvalidCharacterization(Vec<Finding>),
    #[error("goal weights do not match the goal set: {0}")]
    WeightMismatch(String),
    #[error(transparent)]
    Inference(#[from] BayesError),
}

impl CostError {
    pub fn code(&self) -> &'static str {
        match self {
            CostError::InvalidCharacterization(_) => "INVALID_CHARACTERIZATION",
            CostError::WeightMismatch(_) => "WEIGHT_MISMATCH",
            CostError::Inference(e) => e.code(),
        }
    }
}

/// Distribution over the five cost levels, with the evidence that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostDistribution {
    pub probabilities: StateDistribution,
    #[serde(default)]
    pub provenance: Evidence,
}

impl CostDistribution {
    pub fn point_mass(level: OrdinalLevel) -> Self {
        let mut probabilities = [0.0; LEVEL_COUNT];
        probabilities[level.index()] = 1.0;
        CostDistribution {
            probabilities,
            provenance: Evidence::new(),
        }
    }

    pub fn expectation(&self) -> f64 {
        self.probabilities
            .iter()
            .zip(OrdinalLevel::ALL)
            .map(|(p, l)| p * l.image())
            .sum()
    }

    pub fn is_point_mass(&self) -> bool {
        self.probabilities.iter().filter(|&&p| p > 0.0).count() == 1
    }
}

/// Goal id with its polarity, as fed to [`goal_aggregate`].
#[derive(Debug, Clone, PartialEq)]
pub struct GoalSpec {
    pub id: String,
    pub polarity: Polarity,
}

/// Scalarizes goal posteriors into one cost distribution. Benefit goals are inverted, the
/// weighted mean of level images is distributed exactly (goals treated as independent) and
/// every support point is rebinned to its nearest level.
pub fn goal_aggregate(
    posteriors: &Posterior,
    goals: &[GoalSpec],
    weights: &std::collections::BTreeMap<String, f64>,
) -> Result<CostDistribution, CostError> {
    let ids: BTreeSet<&str> = goals.iter().map(|g| g.id.as_str()).collect();
    if let Some(f) = check_goal_weights(weights, &ids).first() {
        return Err(CostError::WeightMismatch(f.message.clone()));
    }
    if weights.is_empty() {
        return Err(CostError::WeightMismatch("no goal weights".into()));
    }
    // support points of the running weighted sum
    let mut support: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    for goal in goals {
        let w = weights[&goal.id];
        if w == 0.0 {
            continue;
        }
        let p = posteriors
            .get(&goal.id)
            .ok_or_else(|| CostError::WeightMismatch(format!("no posterior for goal {}", goal.id)))?;
        let mut next = Vec::with_capacity(support.len() * LEVEL_COUNT);
        for &(value, mass) in &support {
            for level in OrdinalLevel::ALL {
                let k = match goal.polarity {
                    Polarity::Cost => level,
                    Polarity::Benefit => level.invert(),
                };
                let q = p[level.index()];
                if q > 0.0 {
                    next.push((value + w * k.image(), mass * q));
                }
            }
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        support.clear();
        for (v, m) in next {
            match support.last_mut() {
                Some(last) if (v - last.0).abs() <= MERGE_TOLERANCE => last.1 += m,
                _ => support.push((v, m)),
            }
        }
    }
    let mut probabilities = [0.0; LEVEL_COUNT];
    for (v, m) in support {
        probabilities[OrdinalLevel::nearest(v).index()] += m;
    }
    let total: f64 = probabilities.iter().sum();
    probabilities.iter_mut().for_each(|p| *p /= total);
    Ok(CostDistribution {
        probabilities,
        provenance: Evidence::new(),
    })
}

/// Cost functions of one project. Indices follow the characterization's task and site order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub tasks: Vec<String>,
    pub sites: Vec<String>,
    /// `exec[t][s]`, present exactly for available pairs.
    pub exec: Vec<Vec<Option<CostDistribution>>>,
    /// Coupled task pairs `(t, u)` with `t < u`.
    pub coupled: Vec<(usize, usize)>,
    /// `comm[p]` lists one distribution per distinct site pair, in [`site_pairs`] order.
    pub comm: Vec<Vec<CostDistribution>>,
    pub effort_weights: Vec<f64>,
    pub inference_calls: usize,
}

/// Distinct site pairs `(i, j)` with `i < j`, in lexicographic order.
pub fn site_pairs(sites: usize) -> Vec<(usize, usize)> {
    (0..sites)
        .flat_map(|i| (i + 1..sites).map(move |j| (i, j)))
        .collect()
}

fn site_pair_index(sites: usize, a: usize, b: usize) -> usize {
    let (i, j) = if a < b { (a, b) } else { (b, a) };
    // pairs before row i, then offset inside the row
    i * (2 * sites - i - 1) / 2 + (j - i - 1)
}

impl CostModel {
    pub fn exec(&self, task: usize, site: usize) -> Option<&CostDistribution> {
        self.exec.get(task).and_then(|row| row.get(site)).and_then(Option::as_ref)
    }

    /// Communication distribution of coupled pair `pair` placed at sites `a` and `b`; `None`
    /// for co-located placements, whose cost is zero.
    pub fn comm(&self, pair: usize, a: usize, b: usize) -> Option<&CostDistribution> {
        if a == b {
            return None;
        }
        Some(&self.comm[pair][site_pair_index(self.sites.len(), a, b)])
    }

    pub fn is_available(&self, task: usize, site: usize) -> bool {
        self.exec(task, site).is_some()
    }

    /// CSV audit dump of every distribution with its evidence.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,tasks,sites,p_very_low,p_low,p_medium,p_high,p_very_high,evidence\n");
        let mut row = |kind: &str, tasks: String, sites: String, d: &CostDistribution| {
            let probs: Vec<String> = d.probabilities.iter().map(|p| p.to_string()).collect();
            let evidence: Vec<String> = d.provenance.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(out, "{kind},{tasks},{sites},{},{}", probs.join(","), evidence.join(";"));
        };
        for (t, task) in self.tasks.iter().enumerate() {
            for (s, site) in self.sites.iter().enumerate() {
                if let Some(d) = self.exec(t, s) {
                    row("exec", task.clone(), site.clone(), d);
                }
            }
        }
        let pairs = site_pairs(self.sites.len());
        for (p, &(t, u)) in self.coupled.iter().enumerate() {
            for (k, &(i, j)) in pairs.iter().enumerate() {
                row(
                    "comm",
                    format!("{}~{}", self.tasks[t], self.tasks[u]),
                    format!("{}~{}", self.sites[i], self.sites[j]),
                    &self.comm[p][k],
                );
            }
        }
        out
    }
}

fn clamp(
    model: &CausalModel,
    net: &BayesianNetwork,
    project: &ProjectCharacterization,
    bindings: &[Binding],
) -> Evidence {
    let mut evidence = Evidence::new();
    for def in model.factors.iter() {
        if net.index_of(&def.id).is_none() {
            continue;
        }
        if let Some(b) = bindings.iter().find(|b| b.scope() == def.scope) {
            if let Some(v) = project.value(def, b) {
                evidence.insert(def.id.clone(), v.as_level());
            }
        }
    }
    evidence
}

struct Query<'a> {
    net: &'a BayesianNetwork,
    goals: Vec<GoalSpec>,
    weights: &'a std::collections::BTreeMap<String, f64>,
}

impl Query<'_> {
    fn run(&self, evidence: Evidence) -> Result<CostDistribution, CostError> {
        let ids: Vec<&str> = self.goals.iter().map(|g| g.id.as_str()).collect();
        let posterior = infer_marginals(self.net, &evidence, &ids)?;
        let mut d = goal_aggregate(&posterior, &self.goals, self.weights)?;
        d.provenance = evidence;
        Ok(d)
    }
}

/// Infers every execution and communication cost distribution of a project.
pub fn build_cost_model(
    model: &CausalModel,
    net: &BayesianNetwork,
    project: &ProjectCharacterization,
    coupling: &CouplingRule,
) -> Result<CostModel, CostError> {
    let findings = validate_characterization(project, model);
    if !findings.is_empty() {
        return Err(CostError::InvalidCharacterization(findings));
    }
    let query = Query {
        net,
        goals: model
            .goals()
            .map(|g| GoalSpec {
                id: g.id.clone(),
                polarity: g.effective_polarity(),
            })
            .collect(),
        weights: project.effective_goal_weights(model),
    };

    let n_sites = project.sites.len();
    let cells: Vec<(usize, usize)> = (0..project.tasks.len())
        .flat_map(|t| (0..n_sites).map(move |s| (t, s)))
        .filter(|&(t, s)| project.is_available(t, s))
        .collect();
    let exec_results: Vec<CostDistribution> = cells
        .par_iter()
        .map(|&(t, s)| {
            let task = &project.tasks[t].id;
            let site = &project.sites[s];
            let bindings = [
                Binding::Project,
                Binding::task(task),
                Binding::site(site),
                Binding::task_site(task, site),
            ];
            query.run(clamp(model, net, project, &bindings))
        })
        .collect::<Result<_, _>>()?;
    let mut exec = vec![vec![None; n_sites]; project.tasks.len()];
    for (&(t, s), d) in cells.iter().zip(exec_results) {
        exec[t][s] = Some(d);
    }

    let coupled = coupling.coupled_pairs(&model.factors, project);
    let pairs = site_pairs(n_sites);
    let comm_jobs: Vec<(usize, usize)> = (0..coupled.len())
        .flat_map(|p| (0..pairs.len()).map(move |k| (p, k)))
        .collect();
    let comm_results: Vec<CostDistribution> = comm_jobs
        .par_iter()
        .map(|&(p, k)| {
            let (t, u) = coupled[p];
            let (i, j) = pairs[k];
            let bindings = [
                Binding::Project,
                Binding::task_pair(&project.tasks[t].id, &project.tasks[u].id),
                Binding::site_pair(&project.sites[i], &project.sites[j]),
            ];
            query.run(clamp(model, net, project, &bindings))
        })
        .collect::<Result<_, _>>()?;
    let mut comm = vec![Vec::with_capacity(pairs.len()); coupled.len()];
    for (&(p, _), d) in comm_jobs.iter().zip(comm_results) {
        comm[p].push(d);
    }
    debug_assert!(pairs.iter().enumerate().all(|(k, &(i, j))| site_pair_index(n_sites, i, j) == k));

    Ok(CostModel {
        tasks: project.tasks.iter().map(|t| t.id.clone()).collect(),
        sites: project.sites.clone(),
        exec,
        coupled,
        comm,
        effort_weights: project.tasks.iter().map(|t| t.effort_weight).collect(),
        inference_calls: cells.len() + comm_jobs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn point(level: OrdinalLevel) -> StateDistribution {
        CostDistribution::point_mass(level).probabilities
    }

    fn posterior(entries: &[(&str, StateDistribution)]) -> Posterior {
        Posterior {
            marginals: entries.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    fn goal(id: &str, polarity: Polarity) -> GoalSpec {
        GoalSpec {
            id: id.into(),
            polarity,
        }
    }

    #[test]
    fn single_cost_goal_is_identity() {
        let p = [0.1, 0.2, 0.3, 0.25, 0.15];
        let d = goal_aggregate(
            &posterior(&[("g", p)]),
            &[goal("g", Polarity::Cost)],
            &BTreeMap::from([("g".into(), 1.0)]),
        )
        .unwrap();
        for k in 0..5 {
            assert!((d.probabilities[k] - p[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn benefit_goal_inverts() {
        let d = goal_aggregate(
            &posterior(&[("q", point(OrdinalLevel::VeryHigh))]),
            &[goal("q", Polarity::Benefit)],
            &BTreeMap::from([("q".into(), 1.0)]),
        )
        .unwrap();
        assert_eq!(d.probabilities, point(OrdinalLevel::VeryLow));
    }

    #[test]
    fn equal_weights_of_low_and_high_give_medium() {
        let d = goal_aggregate(
            &posterior(&[("a", point(OrdinalLevel::Low)), ("b", point(OrdinalLevel::High))]),
            &[goal("a", Polarity::Cost), goal("b", Polarity::Cost)],
            &BTreeMap::from([("a".into(), 0.5), ("b".into(), 0.5)]),
        )
        .unwrap();
        assert_eq!(d.probabilities, point(OrdinalLevel::Medium));
    }

    #[test]
    fn two_point_goals_convolve() {
        // a uniform on {very_low, very_high}, b point mass at very_low; weights 0.5 each:
        // sums 0 and 0.5 with mass 1/2 each
        let mut a = [0.0; 5];
        a[0] = 0.5;
        a[4] = 0.5;
        let d = goal_aggregate(
            &posterior(&[("a", a), ("b", point(OrdinalLevel::VeryLow))]),
            &[goal("a", Polarity::Cost), goal("b", Polarity::Cost)],
            &BTreeMap::from([("a".into(), 0.5), ("b".into(), 0.5)]),
        )
        .unwrap();
        assert_eq!(d.probabilities, [0.5, 0.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn weight_mismatch() {
        let err = goal_aggregate(
            &posterior(&[("a", point(OrdinalLevel::Low))]),
            &[goal("a", Polarity::Cost)],
            &BTreeMap::from([("a".into(), 0.7)]),
        )
        .unwrap_err();
        assert_eq!(err.code(), "WEIGHT_MISMATCH");
        let err = goal_aggregate(
            &posterior(&[("a", point(OrdinalLevel::Low))]),
            &[goal("a", Polarity::Cost)],
            &BTreeMap::from([("b".into(), 1.0)]),
        )
        .unwrap_err();
        assert_eq!(err.code(), "WEIGHT_MISMATCH");
    }

    #[test]
    fn site_pair_indexing() {
        for n in 1..7 {
            for (k, (i, j)) in site_pairs(n).into_iter().enumerate() {
                assert_eq!(site_pair_index(n, i, j), k);
                assert_eq!(site_pair_index(n, j, i), k);
            }
        }
    }
}
