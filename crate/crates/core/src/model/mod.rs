//! Factor catalog, causal model, project characterization and their validation.

mod catalog;
mod causal;
mod level;
mod project;
mod skeleton;
mod validate;

pub use catalog::{is_snake_identifier, FactorCatalog, FactorDefinition, FactorKind, FactorScope};
pub use causal::{
    Aggregation, CausalEdge, CausalModel, CausalNode, NodeRole, Polarity, Sign, WeightPreset,
    DEFAULT_NOISE_SIGMA, MODEL_SCHEMA_VERSION,
};
pub use level::{FactorValue, OrdinalLevel, LEVEL_COUNT};
pub use project::{
    Assignment, AssignmentError, Binding, CouplingRule, FactorValues, ProjectCharacterization,
    Task,
};
pub use skeleton::{derive_causal_skeleton, GoalDeclaration, GoalDeclarations, GoalLink, SkeletonError};
pub use validate::{
    check_goal_weights, has_code, validate_characterization, validate_model, Finding, FindingCode,
};
