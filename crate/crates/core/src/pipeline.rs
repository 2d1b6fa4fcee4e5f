//! End-to-end suggestion run: network compilation, cost inference, Monte Carlo ranking.

use thiserror::Error;

use crate::bayes::{compile_network, BayesError};
use crate::cost::{build_cost_model, CostError, CostModel};
use crate::io::IoError;
use crate::model::{CausalModel, CouplingRule, ProjectCharacterization, SkeletonError};
use crate::optimizer::{run_simulation, OptimizerError, SimulationSettings, SuggestionList};
use crate::risk::RiskError;
use crate::rules::RuleError;

/// Any failure of the library, with a stable machine-readable code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Bayes(#[from] BayesError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Bayes(e) => e.code(),
            Error::Cost(e) => e.code(),
            Error::Optimizer(e) => e.code(),
            Error::Risk(e) => e.code(),
            Error::Rule(e) => e.code(),
            Error::Skeleton(e) => e.code(),
            Error::Io(e) => e.code(),
        }
    }
}

/// Compiles the model and infers the project's cost functions.
pub fn cost_model(
    model: &CausalModel,
    project: &ProjectCharacterization,
    coupling: &CouplingRule,
) -> Result<CostModel, Error> {
    let net = compile_network(model)?;
    Ok(build_cost_model(model, &net, project, coupling)?)
}

/// Ranked suggestions for a project under a model.
pub fn suggest(
    model: &CausalModel,
    project: &ProjectCharacterization,
    coupling: &CouplingRule,
    settings: &SimulationSettings,
) -> Result<SuggestionList, Error> {
    let cm = cost_model(model, project, coupling)?;
    Ok(run_simulation(&cm, settings)?)
}
