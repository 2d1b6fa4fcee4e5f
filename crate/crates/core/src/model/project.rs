use std::collections::BTreeMap;
use std::fmt;

use indexmap::IndexMap;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::catalog::{FactorCatalog, FactorDefinition, FactorScope};
use super::causal::CausalModel;
use super::level::{FactorValue, OrdinalLevel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    #[serde(default = "default_effort", skip_serializing_if = "is_default_effort")]
    pub effort_weight: f64,
}

fn default_effort() -> f64 {
    1.0
}

fn is_default_effort(w: &f64) -> bool {
    *w == 1.0
}

impl Task {
    pub fn new(id: impl Into<String>) -> Self {
        Task {
            id: id.into(),
            effort_weight: 1.0,
        }
    }

    pub fn with_effort(mut self, effort_weight: f64) -> Self {
        self.effort_weight = effort_weight;
        self
    }
}

/// The entity (or entity pair) a factor value is attached to.
///
/// Pair bindings are kept in canonical order (lexicographically sorted ids), so a value for an
/// unordered pair is stored once.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "scope", rename_all = "snake_case", deny_unknown_fields)]
pub enum Binding {
    Project,
    Task { task: String },
    Site { site: String },
    TaskPair { tasks: [String; 2] },
    SitePair { sites: [String; 2] },
    TaskSite { task: String, site: String },
}

impl Binding {
    pub fn task(task: impl Into<String>) -> Self {
        Binding::Task { task: task.into() }
    }

    pub fn site(site: impl Into<String>) -> Self {
        Binding::Site { site: site.into() }
    }

    pub fn task_pair(a: impl Into<String>, b: impl Into<String>) -> Self {
        Binding::TaskPair {
            tasks: sorted_pair(a.into(), b.into()),
        }
    }

    pub fn site_pair(a: impl Into<String>, b: impl Into<String>) -> Self {
        Binding::SitePair {
            sites: sorted_pair(a.into(), b.into()),
        }
    }

    pub fn task_site(task: impl Into<String>, site: impl Into<String>) -> Self {
        Binding::TaskSite {
            task: task.into(),
            site: site.into(),
        }
    }

    pub fn scope(&self) -> FactorScope {
        match self {
            Binding::Project => FactorScope::Project,
            Binding::Task { .. } => FactorScope::Task,
            Binding::Site { .. } => FactorScope::Site,
            Binding::TaskPair { .. } => FactorScope::TaskPair,
            Binding::SitePair { .. } => FactorScope::SitePair,
            Binding::TaskSite { .. } => FactorScope::TaskSite,
        }
    }

    pub fn canonical(self) -> Self {
        match self {
            Binding::TaskPair { tasks: [a, b] } => Binding::task_pair(a, b),
            Binding::SitePair { sites: [a, b] } => Binding::site_pair(a, b),
            other => other,
        }
    }
}

fn sorted_pair(a: String, b: String) -> [String; 2] {
    if a <= b {
        [a, b]
    } else {
        [b, a]
    }
}

impl fmt::Display for Binding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binding::Project => f.write_str("project"),
            Binding::Task { task } => write!(f, "task {task}"),
            Binding::Site { site } => write!(f, "site {site}"),
            Binding::TaskPair { tasks } => write!(f, "tasks {}~{}", tasks[0], tasks[1]),
            Binding::SitePair { sites } => write!(f, "sites {}~{}", sites[0], sites[1]),
            Binding::TaskSite { task, site } => write!(f, "task {task} at {site}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ValueEntry {
    factor: String,
    binding: Binding,
    value: FactorValue,
}

/// Factor valuations keyed by `(factor id, canonical binding)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FactorValues {
    entries: BTreeMap<(String, Binding), FactorValue>,
}

impl FactorValues {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces; returns the previous value.
    pub fn set(
        &mut self,
        factor: impl Into<String>,
        binding: Binding,
        value: impl Into<FactorValue>,
    ) -> Option<FactorValue> {
        self.entries
            .insert((factor.into(), binding.canonical()), value.into())
    }

    pub fn get(&self, factor: &str, binding: &Binding) -> Option<FactorValue> {
        let key = (factor.to_string(), binding.clone().canonical());
        self.entries.get(&key).copied()
    }

    pub fn remove(&mut self, factor: &str, binding: &Binding) -> Option<FactorValue> {
        let key = (factor.to_string(), binding.clone().canonical());
        self.entries.remove(&key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Binding, FactorValue)> {
        self.entries.iter().map(|((f, b), v)| (f.as_str(), b, *v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Serialize for FactorValues {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let entries: Vec<ValueEntry> = self
            .entries
            .iter()
            .map(|((factor, binding), value)| ValueEntry {
                factor: factor.clone(),
                binding: binding.clone(),
                value: *value,
            })
            .collect();
        entries.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FactorValues {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<ValueEntry>::deserialize(deserializer)?;
        let mut values = FactorValues::new();
        for entry in raw {
            let binding = entry.binding.canonical();
            let text = format!("{} for {}", entry.factor, binding);
            if values.set(entry.factor, binding, entry.value).is_some() {
                return Err(D::Error::custom(format!("duplicate value entry: {text}")));
            }
        }
        Ok(values)
    }
}

/// Tasks, sites, availability and factor valuations of one project.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectCharacterization {
    pub tasks: Vec<Task>,
    pub sites: Vec<String>,
    /// Row per task, column per site; `true` when the site can staff the task.
    pub availability: Vec<Vec<bool>>,
    #[serde(default)]
    pub values: FactorValues,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_weight_overrides: Option<BTreeMap<String, f64>>,
}

impl ProjectCharacterization {
    /// All tasks available at all sites, no values.
    pub fn new(tasks: Vec<Task>, sites: Vec<String>) -> Self {
        let availability = vec![vec![true; sites.len()]; tasks.len()];
        ProjectCharacterization {
            tasks,
            sites,
            availability,
            values: FactorValues::new(),
            goal_weight_overrides: None,
        }
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    pub fn site_index(&self, id: &str) -> Option<usize> {
        self.sites.iter().position(|s| s == id)
    }

    pub fn is_available(&self, task: usize, site: usize) -> bool {
        self.availability
            .get(task)
            .and_then(|row| row.get(site))
            .copied()
            .unwrap_or(false)
    }

    pub fn available_sites(&self, task: usize) -> Vec<usize> {
        (0..self.sites.len())
            .filter(|&s| self.is_available(task, s))
            .collect()
    }

    /// Characterized value, falling back to the factor's catalog default.
    pub fn value(&self, def: &FactorDefinition, binding: &Binding) -> Option<FactorValue> {
        self.values.get(&def.id, binding).or(def.default)
    }

    /// Every binding a factor of `scope` must be valued for.
    pub fn required_bindings(&self, scope: FactorScope) -> Vec<Binding> {
        let mut out = Vec::new();
        match scope {
            FactorScope::Project => out.push(Binding::Project),
            FactorScope::Task => out.extend(self.tasks.iter().map(|t| Binding::task(&t.id))),
            FactorScope::Site => out.extend(self.sites.iter().map(Binding::site)),
            FactorScope::TaskPair => {
                for (i, a) in self.tasks.iter().enumerate() {
                    for b in &self.tasks[i + 1..] {
                        out.push(Binding::task_pair(&a.id, &b.id));
                    }
                }
            }
            FactorScope::SitePair => {
                for (i, a) in self.sites.iter().enumerate() {
                    for b in &self.sites[i + 1..] {
                        out.push(Binding::site_pair(a, b));
                    }
                }
            }
            FactorScope::TaskSite => {
                for (t, task) in self.tasks.iter().enumerate() {
                    for s in self.available_sites(t) {
                        out.push(Binding::task_site(&task.id, &self.sites[s]));
                    }
                }
            }
        }
        out
    }

    /// Project overrides take precedence over the organization model.
    pub fn effective_goal_weights<'a>(&'a self, model: &'a CausalModel) -> &'a BTreeMap<String, f64> {
        self.goal_weight_overrides
            .as_ref()
            .unwrap_or(&model.goal_weights)
    }

    /// Number of candidate assignments, saturating.
    pub fn search_space(&self) -> u64 {
        (0..self.tasks.len()).fold(1u64, |acc, t| {
            acc.saturating_mul(self.available_sites(t).len() as u64)
        })
    }
}

/// Which task pairs exchange work: pairs whose coupling exceeds a threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingRule {
    pub factor: String,
    /// Pairs at or below this level are treated as uncoupled.
    pub threshold: OrdinalLevel,
}

impl Default for CouplingRule {
    fn default() -> Self {
        CouplingRule {
            factor: "coupling".to_string(),
            threshold: OrdinalLevel::VeryLow,
        }
    }
}

impl CouplingRule {
    /// Coupled task pairs `(t, u)` with `t < u`, in task order. Empty when the catalog has no
    /// coupling factor.
    pub fn coupled_pairs(
        &self,
        catalog: &FactorCatalog,
        project: &ProjectCharacterization,
    ) -> Vec<(usize, usize)> {
        let Some(def) = catalog.get(&self.factor) else {
            return Vec::new();
        };
        let mut pairs = Vec::new();
        for t in 0..project.tasks.len() {
            for u in t + 1..project.tasks.len() {
                let binding = Binding::task_pair(&project.tasks[t].id, &project.tasks[u].id);
                let coupled = match project.value(def, &binding) {
                    Some(FactorValue::Bool(b)) => b,
                    Some(FactorValue::Level(l)) => l > self.threshold,
                    None => false,
                };
                if coupled {
                    pairs.push((t, u));
                }
            }
        }
        pairs
    }
}

/// Total mapping of tasks to sites, kept in task order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment {
    pub mapping: IndexMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AssignmentError {
    #[error("assignment names unknown task `{0}`")]
    UnknownTask(String),
    #[error("assignment names unknown site `{0}`")]
    UnknownSite(String),
    #[error("task `{0}` is not assigned")]
    Unassigned(String),
    #[error("site `{site}` has no resources for task `{task}`")]
    Unavailable { task: String, site: String },
}

impl Assignment {
    pub fn from_indices(project: &ProjectCharacterization, sites: &[usize]) -> Self {
        let mapping = project
            .tasks
            .iter()
            .zip(sites)
            .map(|(t, &s)| (t.id.clone(), project.sites[s].clone()))
            .collect();
        Assignment { mapping }
    }

    pub fn site_of(&self, task: &str) -> Option<&str> {
        self.mapping.get(task).map(String::as_str)
    }

    /// Site index per task; checks totality and availability.
    pub fn to_indices(&self, project: &ProjectCharacterization) -> Result<Vec<usize>, AssignmentError> {
        for task in self.mapping.keys() {
            if project.task_index(task).is_none() {
                return Err(AssignmentError::UnknownTask(task.clone()));
            }
        }
        project
            .tasks
            .iter()
            .enumerate()
            .map(|(t, task)| {
                let site = self
                    .mapping
                    .get(&task.id)
                    .ok_or_else(|| AssignmentError::Unassigned(task.id.clone()))?;
                let s = project
                    .site_index(site)
                    .ok_or_else(|| AssignmentError::UnknownSite(site.clone()))?;
                if !project.is_available(t, s) {
                    return Err(AssignmentError::Unavailable {
                        task: task.id.clone(),
                        site: site.clone(),
                    });
                }
                Ok(s)
            })
            .collect()
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .mapping
            .iter()
            .map(|(t, s)| format!("{t}->{s}"))
            .collect();
        f.write_str(&parts.join(", "))
    }
}
