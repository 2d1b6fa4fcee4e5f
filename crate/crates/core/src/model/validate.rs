//! Structural checks for causal models and project characterizations.
//!
//! Problems are reported as [`Finding`]s rather than errors so that a caller can show all of
//! them at once.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::catalog::is_snake_identifier;
use super::causal::{CausalModel, NodeRole};
use super::project::{Binding, ProjectCharacterization};

const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FindingCode {
    // model
    Cycle,
    SelfEdge,
    DuplicateEdge,
    DuplicateNode,
    DuplicateFactor,
    InvalidIdentifier,
    UnknownNode,
    UnknownFactor,
    InvalidWeight,
    InvalidNoise,
    MisplacedAttribute,
    GoalHasOutgoing,
    FactorHasIncoming,
    NoParents,
    GoalUnreachable,
    NoFactors,
    NoGoals,
    WeightsNotNormalized,
    GoalWeightKeys,
    // characterization
    DuplicateEntity,
    AvailabilityShape,
    TaskUnassignable,
    InvalidEffort,
    MissingValue,
    UnknownEntity,
    ScopeMismatch,
    ValueKindMismatch,
    InvalidBinding,
    // files
    UnknownKey,
}

impl FindingCode {
    pub fn as_str(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default()
    }
}

impl fmt::Display for FindingCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: FindingCode,
    /// Node, edge, entity or key ids the finding is about.
    pub locus: Vec<String>,
    pub message: String,
}

impl Finding {
    pub fn new(code: FindingCode, locus: Vec<String>, message: impl Into<String>) -> Self {
        Finding {
            code,
            locus,
            message: message.into(),
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.code, self.locus.join(", "), self.message)
    }
}

pub fn has_code(findings: &[Finding], code: FindingCode) -> bool {
    findings.iter().any(|f| f.code == code)
}

/// Checks every structural invariant of a causal model. Empty result means valid.
pub fn validate_model(model: &CausalModel) -> Vec<Finding> {
    let mut out = Vec::new();

    let mut seen_factors = HashSet::new();
    for def in model.factors.iter() {
        if !is_snake_identifier(&def.id) {
            out.push(Finding::new(
                FindingCode::InvalidIdentifier,
                vec![def.id.clone()],
                "factor ids must be lowercase snake identifiers",
            ));
        }
        if !seen_factors.insert(def.id.as_str()) {
            out.push(Finding::new(
                FindingCode::DuplicateFactor,
                vec![def.id.clone()],
                "factor defined more than once",
            ));
        }
    }

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, node) in model.nodes.iter().enumerate() {
        if index.insert(node.id.as_str(), i).is_some() {
            out.push(Finding::new(
                FindingCode::DuplicateNode,
                vec![node.id.clone()],
                "node declared more than once",
            ));
        }
        match node.role {
            NodeRole::Factor => {
                if !model.factors.contains(&node.id) {
                    out.push(Finding::new(
                        FindingCode::UnknownFactor,
                        vec![node.id.clone()],
                        "factor node has no factor definition",
                    ));
                }
                if node.polarity.is_some() || node.aggregation.is_some() || node.noise_sigma.is_some()
                {
                    out.push(Finding::new(
                        FindingCode::MisplacedAttribute,
                        vec![node.id.clone()],
                        "factor nodes take no polarity, aggregation or noise",
                    ));
                }
            }
            NodeRole::Intermediate | NodeRole::Goal => {
                if node.role == NodeRole::Intermediate && node.polarity.is_some() {
                    out.push(Finding::new(
                        FindingCode::MisplacedAttribute,
                        vec![node.id.clone()],
                        "only goal nodes carry a polarity",
                    ));
                }
                if let Some(sigma) = node.noise_sigma {
                    if !(sigma.is_finite() && sigma >= 0.0) {
                        out.push(Finding::new(
                            FindingCode::InvalidNoise,
                            vec![node.id.clone()],
                            format!("noise_sigma must be finite and >= 0, got {sigma}"),
                        ));
                    }
                }
            }
        }
    }

    let mut pairs = HashSet::new();
    let mut graph = DiGraph::<usize, ()>::new();
    let handles: Vec<_> = (0..model.nodes.len()).map(|i| graph.add_node(i)).collect();
    for edge in &model.edges {
        let locus = vec![edge.source.clone(), edge.target.clone()];
        let (Some(&s), Some(&t)) = (index.get(edge.source.as_str()), index.get(edge.target.as_str()))
        else {
            out.push(Finding::new(
                FindingCode::UnknownNode,
                locus,
                "edge endpoint is not a declared node",
            ));
            continue;
        };
        if s == t {
            out.push(Finding::new(FindingCode::SelfEdge, locus, "edge loops onto its source"));
            continue;
        }
        if !pairs.insert((s, t)) {
            out.push(Finding::new(
                FindingCode::DuplicateEdge,
                locus.clone(),
                "edge declared more than once",
            ));
        }
        if !(edge.weight > 0.0 && edge.weight <= 1.0) {
            out.push(Finding::new(
                FindingCode::InvalidWeight,
                locus.clone(),
                format!("edge weight must lie in (0, 1], got {}", edge.weight),
            ));
        }
        if model.nodes[s].role == NodeRole::Goal {
            out.push(Finding::new(
                FindingCode::GoalHasOutgoing,
                locus.clone(),
                "goal nodes have no outgoing edges",
            ));
        }
        if model.nodes[t].role == NodeRole::Factor {
            out.push(Finding::new(
                FindingCode::FactorHasIncoming,
                locus.clone(),
                "factor nodes have no incoming edges",
            ));
        }
        graph.add_edge(handles[s], handles[t], ());
    }

    for component in tarjan_scc(&graph) {
        if component.len() > 1 {
            let mut ids: Vec<String> = component
                .iter()
                .map(|h| model.nodes[graph[*h]].id.clone())
                .collect();
            ids.sort();
            out.push(Finding::new(FindingCode::Cycle, ids, "edges form a cycle"));
        }
    }

    for node in &model.nodes {
        if node.role != NodeRole::Factor && model.parents(&node.id).next().is_none() {
            out.push(Finding::new(
                FindingCode::NoParents,
                vec![node.id.clone()],
                "non-factor node needs at least one incoming edge",
            ));
        }
    }

    let factor_count = model.factor_nodes().count();
    if factor_count == 0 {
        out.push(Finding::new(FindingCode::NoFactors, vec![], "model has no factor nodes"));
    }
    let goal_ids: BTreeSet<&str> = model.goals().map(|g| g.id.as_str()).collect();
    if goal_ids.is_empty() {
        out.push(Finding::new(FindingCode::NoGoals, vec![], "model has no goal nodes"));
    }

    // reachability from factor nodes
    let mut reached: HashSet<&str> = model.factor_nodes().map(|n| n.id.as_str()).collect();
    let mut frontier: Vec<&str> = reached.iter().copied().collect();
    while let Some(id) = frontier.pop() {
        for e in model.children(id) {
            if reached.insert(e.target.as_str()) {
                frontier.push(e.target.as_str());
            }
        }
    }
    for goal in &goal_ids {
        if !reached.contains(goal) {
            out.push(Finding::new(
                FindingCode::GoalUnreachable,
                vec![goal.to_string()],
                "no factor node reaches this goal",
            ));
        }
    }

    out.extend(check_goal_weights(&model.goal_weights, &goal_ids));
    out
}

/// Goal weights must cover exactly the goal set, be non-negative and sum to 1.
pub fn check_goal_weights(
    weights: &std::collections::BTreeMap<String, f64>,
    goal_ids: &BTreeSet<&str>,
) -> Vec<Finding> {
    let mut out = Vec::new();
    let keys: BTreeSet<&str> = weights.keys().map(String::as_str).collect();
    if &keys != goal_ids {
        let mut locus: Vec<String> = keys
            .symmetric_difference(goal_ids)
            .map(|s| s.to_string())
            .collect();
        locus.sort();
        out.push(Finding::new(
            FindingCode::GoalWeightKeys,
            locus,
            "goal weight keys must equal the goal node set",
        ));
    }
    let mut sum = 0.0;
    for (goal, &w) in weights {
        if !(w.is_finite() && w >= 0.0) {
            out.push(Finding::new(
                FindingCode::WeightsNotNormalized,
                vec![goal.clone()],
                format!("goal weight must be finite and >= 0, got {w}"),
            ));
        }
        sum += w;
    }
    if !weights.is_empty() && (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
        out.push(Finding::new(
            FindingCode::WeightsNotNormalized,
            weights.keys().cloned().collect(),
            format!("goal weights sum to {sum}, expected 1"),
        ));
    }
    out
}

/// Checks a characterization against a (valid) model: entity lists, availability, and that
/// every catalog factor is valued for each binding its scope demands.
pub fn validate_characterization(
    project: &ProjectCharacterization,
    model: &CausalModel,
) -> Vec<Finding> {
    let mut out = Vec::new();

    let mut seen = HashSet::new();
    for task in &project.tasks {
        if !seen.insert(task.id.as_str()) {
            out.push(Finding::new(
                FindingCode::DuplicateEntity,
                vec![task.id.clone()],
                "task listed more than once",
            ));
        }
        if !(task.effort_weight.is_finite() && task.effort_weight > 0.0) {
            out.push(Finding::new(
                FindingCode::InvalidEffort,
                vec![task.id.clone()],
                format!("effort_weight must be > 0, got {}", task.effort_weight),
            ));
        }
    }
    let mut seen = HashSet::new();
    for site in &project.sites {
        if !seen.insert(site.as_str()) {
            out.push(Finding::new(
                FindingCode::DuplicateEntity,
                vec![site.clone()],
                "site listed more than once",
            ));
        }
    }

    let shape_ok = project.availability.len() == project.tasks.len()
        && project
            .availability
            .iter()
            .all(|row| row.len() == project.sites.len());
    if !shape_ok {
        out.push(Finding::new(
            FindingCode::AvailabilityShape,
            vec![],
            format!(
                "availability must be {} rows of {} columns",
                project.tasks.len(),
                project.sites.len()
            ),
        ));
    }
    for (t, task) in project.tasks.iter().enumerate() {
        if project.available_sites(t).is_empty() {
            out.push(Finding::new(
                FindingCode::TaskUnassignable,
                vec![task.id.clone()],
                "no site has resources for this task",
            ));
        }
    }

    // values present but not interpretable
    for (factor, binding, value) in project.values.iter() {
        let locus = vec![factor.to_string(), binding.to_string()];
        let Some(def) = model.factors.get(factor) else {
            out.push(Finding::new(
                FindingCode::UnknownFactor,
                locus,
                "value for a factor the model does not define",
            ));
            continue;
        };
        if def.scope != binding.scope() {
            out.push(Finding::new(
                FindingCode::ScopeMismatch,
                locus,
                format!("factor has scope {} but value is bound at {}", def.scope, binding.scope()),
            ));
            continue;
        }
        if !def.accepts(value) {
            out.push(Finding::new(
                FindingCode::ValueKindMismatch,
                locus.clone(),
                format!("value `{value}` does not match factor kind"),
            ));
        }
        if let Some(problem) = binding_problem(project, binding) {
            out.push(Finding::new(problem.0, locus, problem.1));
        }
    }

    if let Some(overrides) = &project.goal_weight_overrides {
        let goal_ids: BTreeSet<&str> = model.goals().map(|g| g.id.as_str()).collect();
        out.extend(check_goal_weights(overrides, &goal_ids));
    }

    for def in model.factors.iter() {
        for binding in project.required_bindings(def.scope) {
            if project.value(def, &binding).is_none() {
                out.push(Finding::new(
                    FindingCode::MissingValue,
                    vec![def.id.clone(), binding.to_string()],
                    "factor is not valued for this binding",
                ));
            }
        }
    }
    out
}

fn binding_problem(
    project: &ProjectCharacterization,
    binding: &Binding,
) -> Option<(FindingCode, String)> {
    let unknown_task = |t: &str| project.task_index(t).is_none();
    let unknown_site = |s: &str| project.site_index(s).is_none();
    match binding {
        Binding::Project => None,
        Binding::Task { task } if unknown_task(task) => {
            Some((FindingCode::UnknownEntity, format!("unknown task `{task}`")))
        }
        Binding::Site { site } if unknown_site(site) => {
            Some((FindingCode::UnknownEntity, format!("unknown site `{site}`")))
        }
        Binding::TaskPair { tasks } => {
            if let Some(t) = tasks.iter().find(|t| unknown_task(t)) {
                Some((FindingCode::UnknownEntity, format!("unknown task `{t}`")))
            } else if tasks[0] == tasks[1] {
                Some((FindingCode::InvalidBinding, "task pair needs two distinct tasks".into()))
            } else {
                None
            }
        }
        Binding::SitePair { sites } => {
            if let Some(s) = sites.iter().find(|s| unknown_site(s)) {
                Some((FindingCode::UnknownEntity, format!("unknown site `{s}`")))
            } else if sites[0] == sites[1] {
                Some((FindingCode::InvalidBinding, "site pair needs two distinct sites".into()))
            } else {
                None
            }
        }
        Binding::TaskSite { task, site } => {
            if unknown_task(task) {
                Some((FindingCode::UnknownEntity, format!("unknown task `{task}`")))
            } else if unknown_site(site) {
                Some((FindingCode::UnknownEntity, format!("unknown site `{site}`")))
            } else {
                None
            }
        }
        _ => None,
    }
}
