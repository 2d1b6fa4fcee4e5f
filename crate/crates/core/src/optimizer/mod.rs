//! Per-run optimal assignment search and Monte Carlo ranking.

mod simulate;
mod solve;

use thiserror::Error;

pub use simulate::{
    aggregate_runs, assignment_of, run_rng, run_simulation, simulate_run, RunOutcome, SimulationSettings,
    Suggestion, SuggestionList, DEFAULT_RUNS,
};
pub use solve::{
    solve_branch_and_bound, solve_exhaustive, solve_optimal, total_cost, SampledCosts, SearchMethod, Solution,
    DEFAULT_EXHAUSTIVE_LIMIT,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OptimizerError {
    #[error("infeasible assignment: {0}")]
    InfeasibleAssignment(String),
    #[error("infeasible project: {0}")]
    InfeasibleProject(String),
    #[error("at least one run is required")]
    NoRuns,
}

impl OptimizerError {
    pub fn code(&self) -> &'static str {
        match self {
            OptimizerError::InfeasibleAssignment(_) => "INFEASIBLE_ASSIGNMENT",
            OptimizerError::InfeasibleProject(_) => "INFEASIBLE_PROJECT",
            OptimizerError::NoRuns => "NO_RUNS",
        }
    }
}
