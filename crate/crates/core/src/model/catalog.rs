use std::fmt;

use serde::{Deserialize, Serialize};

use super::level::FactorValue;

/// Which entity a factor characterizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorScope {
    Project,
    Task,
    Site,
    TaskPair,
    SitePair,
    TaskSite,
}

impl FactorScope {
    pub fn as_str(self) -> &'static str {
        match self {
            FactorScope::Project => "project",
            FactorScope::Task => "task",
            FactorScope::Site => "site",
            FactorScope::TaskPair => "task_pair",
            FactorScope::SitePair => "site_pair",
            FactorScope::TaskSite => "task_site",
        }
    }
}

impl fmt::Display for FactorScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorKind {
    Ordinal,
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorDefinition {
    pub id: String,
    #[serde(default)]
    pub display_name: String,
    pub scope: FactorScope,
    pub kind: FactorKind,
    /// Value used for any binding the characterization leaves unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<FactorValue>,
}

impl FactorDefinition {
    pub fn new(id: impl Into<String>, scope: FactorScope, kind: FactorKind) -> Self {
        let id = id.into();
        FactorDefinition {
            display_name: id.replace('_', " "),
            id,
            scope,
            kind,
            default: None,
        }
    }

    pub fn with_default(mut self, value: impl Into<FactorValue>) -> Self {
        self.default = Some(value.into());
        self
    }

    pub fn accepts(&self, value: FactorValue) -> bool {
        matches!(
            (self.kind, value),
            (FactorKind::Ordinal, FactorValue::Level(_)) | (FactorKind::Boolean, FactorValue::Bool(_))
        )
    }
}

/// Lowercase snake identifier: `[a-z][a-z0-9_]*`.
pub fn is_snake_identifier(id: &str) -> bool {
    let mut chars = id.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Ordered list of factor definitions with id lookup.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactorCatalog {
    factors: Vec<FactorDefinition>,
}

impl FactorCatalog {
    pub fn new(factors: Vec<FactorDefinition>) -> Self {
        FactorCatalog { factors }
    }

    pub fn get(&self, id: &str) -> Option<&FactorDefinition> {
        self.factors.iter().find(|f| f.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FactorDefinition> {
        self.factors.iter()
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn push(&mut self, def: FactorDefinition) {
        self.factors.push(def);
    }

    pub fn as_slice(&self) -> &[FactorDefinition] {
        &self.factors
    }
}

impl FromIterator<FactorDefinition> for FactorCatalog {
    fn from_iter<I: IntoIterator<Item = FactorDefinition>>(iter: I) -> Self {
        FactorCatalog::new(iter.into_iter().collect())
    }
}
