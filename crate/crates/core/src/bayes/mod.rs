//! Discrete Bayesian network compiled from a causal model, with exact inference.

mod cpt;
mod inference;
mod network;

use thiserror::Error;

use crate::model::Finding;

pub use cpt::{aggregate, cpt_from_function, level_distribution, Cpt, ParentEdge, StateDistribution};
pub use inference::{infer_marginals, infer_posterior, infer_with_order, Evidence, Posterior};
pub use network::{compile_network, BayesianNetwork, DiscreteVariable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BayesError {
    #[error("model is invalid ({} finding(s))", .0.len())]
    InvalidModel(Vec<Finding>),
    #[error("node {0} has no parents")]
    NoParents(String),
    #[error("edge {parent} -> {variable} has invalid weight {weight}")]
    InvalidWeight {
        variable: String,
        parent: String,
        weight: f64,
    },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("evidence has zero probability")]
    InconsistentEvidence,
    #[error("elimination order does not cover every hidden variable")]
    IncompleteOrder,
}

impl BayesError {
    pub fn code(&self) -> &'static str {
        match self {
            BayesError::InvalidModel(_) => "INVALID_MODEL",
            BayesError::NoParents(_) => "NO_PARENTS",
            BayesError::InvalidWeight { .. } => "INVALID_WEIGHT",
            BayesError::UnknownVariable(_) => "UNKNOWN_VARIABLE",
            BayesError::InconsistentEvidence => "INCONSISTENT_EVIDENCE",
            BayesError::IncompleteOrder => "INCOMPLETE_ORDER",
        }
    }
}
