use std::collections::BTreeMap;

use indexmap::IndexMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::model::Assignment;

use super::solve::{solve_optimal, SampledCosts, DEFAULT_EXHAUSTIVE_LIMIT};
use super::OptimizerError;

pub const DEFAULT_RUNS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSettings {
    pub runs: u64,
    pub seed: u64,
    #[serde(default = "default_limit")]
    pub exhaustive_limit: u64,
}

fn default_limit() -> u64 {
    DEFAULT_EXHAUSTIVE_LIMIT
}

impl SimulationSettings {
    pub fn new(runs: u64, seed: u64) -> Self {
        SimulationSettings {
            runs,
            seed,
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suggestion {
    pub assignment: Assignment,
    pub count: u64,
    pub frequency: f64,
    /// Mean total cost over the runs this assignment won.
    pub mean_cost: f64,
}

/// Assignments ranked by how many runs they were optimal in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuggestionList {
    pub entries: Vec<Suggestion>,
    pub runs: u64,
    pub seed: u64,
}

impl SuggestionList {
    pub fn top(&self, k: usize) -> &[Suggestion] {
        &self.entries[..k.min(self.entries.len())]
    }
}

/// Generator of run `run`: the root seed selects the key, the run index the stream.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub sites: Vec<usize>,
    pub cost: f64,
}

pub fn simulate_run(cm: &CostModel, seed: u64, run: u64, exhaustive_limit: u64) -> Result<RunOutcome, OptimizerError> {
    let mut rng = run_rng(seed, run);
    let costs = SampledCosts::sample(cm, &mut rng, seed, run);
    let (solution, _) = solve_optimal(&costs, exhaustive_limit)?;
    Ok(RunOutcome {
        sites: solution.sites,
        cost: solution.cost,
    })
}

/// Ranks outcomes by count descending, then by site-index vector. The result does not depend
/// on the order of `outcomes` except through floating-point summation of mean costs, which is
/// done per assignment in run order.
pub fn aggregate_runs(cm: &CostModel, outcomes: &[RunOutcome], seed: u64) -> SuggestionList {
    let mut groups: BTreeMap<&[usize], (u64, f64)> = BTreeMap::new();
    for o in outcomes {
        let g = groups.entry(o.sites.as_slice()).or_insert((0, 0.0));
        g.0 += 1;
        g.1 += o.cost;
    }
    let runs = outcomes.len() as u64;
    let mut ranked: Vec<(&[usize], u64, f64)> = groups.into_iter().map(|(k, (n, s))| (k, n, s)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let entries = ranked
        .into_iter()
        .map(|(sites, count, sum)| Suggestion {
            assignment: assignment_of(cm, sites),
            count,
            frequency: count as f64 / runs as f64,
            mean_cost: sum / count as f64,
        })
        .collect();
    SuggestionList { entries, runs, seed }
}

pub fn assignment_of(cm: &CostModel, sites: &[usize]) -> Assignment {
    let mapping: IndexMap<String, String> = cm
        .tasks
        .iter()
        .zip(sites)
        .map(|(t, &s)| (t.clone(), cm.sites[s].clone()))
        .collect();
    Assignment { mapping }
}

/// Monte Carlo ranking: each run samples concrete costs and records its optimum.
pub fn run_simulation(cm: &CostModel, settings: &SimulationSettings) -> Result<SuggestionList, OptimizerError> {
    if settings.runs == 0 {
        return Err(OptimizerError::NoRuns);
    }
    let outcomes: Vec<RunOutcome> = (0..settings.runs)
        .into_par_iter()
        .map(|r| simulate_run(cm, settings.seed, r, settings.exhaustive_limit))
        .collect::<Result<_, _>>()?;
    Ok(aggregate_runs(cm, &outcomes, settings.seed))
}
