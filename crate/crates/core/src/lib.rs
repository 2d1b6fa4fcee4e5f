//! Risk-driven allocation of work across distributed development sites.
//!
//! A causal model of influencing factors, problems and goals is compiled into a Bayesian
//! network, turned into execution and communication cost distributions for one project, and
//! sampled in a Monte Carlo loop that ranks task-to-site assignments by how often each is
//! optimal. Lessons-learned rules predict the risks of a chosen assignment.

pub mod bayes;
pub mod cost;
pub mod io;
pub mod model;
pub mod optimizer;
pub mod pipeline;
pub mod risk;
pub mod rules;

pub use pipeline::Error;
