//! Initial causal model derived from a rule set.
//!
//! Every factor mentioned in a rule condition becomes a factor node wired to the rule's
//! problem node; problem nodes are wired to goals through caller-supplied links.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::rules::RuleSet;

use super::catalog::{FactorCatalog, FactorDefinition, FactorKind, FactorScope};
use super::causal::{
    Aggregation, CausalEdge, CausalModel, CausalNode, Polarity, Sign, WeightPreset,
    DEFAULT_NOISE_SIGMA, MODEL_SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalDeclaration {
    pub id: String,
    #[serde(default = "default_polarity")]
    pub polarity: Polarity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

fn default_polarity() -> Polarity {
    Polarity::Cost
}

/// Directed link from a problem (or an intermediate) toward a goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalLink {
    pub source: String,
    pub target: String,
    pub sign: Sign,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

/// Side input of skeleton derivation: goals, problem-to-goal links, and optional factor
/// definitions for the factors the rules mention.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoalDeclarations {
    pub goals: Vec<GoalDeclaration>,
    #[serde(default)]
    pub links: Vec<GoalLink>,
    #[serde(default)]
    pub factors: Vec<FactorDefinition>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SkeletonError {
    #[error("problem `{0}` has no link to any declared goal")]
    UnlinkedProblem(String),
}

impl SkeletonError {
    pub fn code(&self) -> &'static str {
        "UNLINKED_PROBLEM"
    }
}

pub fn derive_causal_skeleton(
    rules: &RuleSet,
    goals: &GoalDeclarations,
) -> Result<CausalModel, SkeletonError> {
    let medium = WeightPreset::Medium.value();
    let goal_ids: HashSet<&str> = goals.goals.iter().map(|g| g.id.as_str()).collect();

    let mut factor_order: Vec<String> = Vec::new();
    let mut problem_order: Vec<String> = Vec::new();
    let mut edges: Vec<CausalEdge> = Vec::new();
    let mut edge_keys: HashSet<(String, String)> = HashSet::new();
    for rule in &rules.rules {
        if !goal_ids.contains(rule.problem.as_str()) && !problem_order.contains(&rule.problem) {
            problem_order.push(rule.problem.clone());
        }
        rule.condition.visit_occurrences(&mut |factor, sign| {
            if !factor_order.iter().any(|f| f == factor) {
                factor_order.push(factor.to_string());
            }
            // first occurrence of a (factor, problem) pair decides its sign
            if edge_keys.insert((factor.to_string(), rule.problem.clone())) {
                edges.push(CausalEdge::new(factor, rule.problem.as_str(), sign, medium));
            }
        });
    }

    let mut adjacency: HashMap<&str, Vec<&str>> = HashMap::new();
    for link in &goals.links {
        adjacency
            .entry(link.source.as_str())
            .or_default()
            .push(link.target.as_str());
    }

    // nodes reachable from problems through links
    let mut reachable: HashSet<&str> = HashSet::new();
    for problem in &problem_order {
        let mut seen: HashSet<&str> = HashSet::from([problem.as_str()]);
        let mut queue = VecDeque::from([problem.as_str()]);
        let mut linked = false;
        while let Some(node) = queue.pop_front() {
            if goal_ids.contains(node) {
                linked = true;
            }
            for &next in adjacency.get(node).into_iter().flatten() {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        if !linked {
            return Err(SkeletonError::UnlinkedProblem(problem.clone()));
        }
        reachable.extend(seen);
    }

    let mut link_intermediates: Vec<String> = Vec::new();
    for link in &goals.links {
        if !reachable.contains(link.source.as_str()) {
            continue;
        }
        for id in [&link.source, &link.target] {
            if !goal_ids.contains(id.as_str())
                && !problem_order.contains(id)
                && !link_intermediates.contains(id)
            {
                link_intermediates.push(id.clone());
            }
        }
        if edge_keys.insert((link.source.clone(), link.target.clone())) {
            edges.push(CausalEdge::new(
                link.source.as_str(),
                link.target.as_str(),
                link.sign,
                link.weight.unwrap_or(medium),
            ));
        }
    }

    let declared: BTreeMap<&str, &FactorDefinition> =
        goals.factors.iter().map(|f| (f.id.as_str(), f)).collect();
    let mut catalog: FactorCatalog = factor_order
        .iter()
        .map(|id| match declared.get(id.as_str()) {
            Some(def) => (*def).clone(),
            None => FactorDefinition::new(id.as_str(), FactorScope::Project, FactorKind::Ordinal),
        })
        .collect();
    let in_rules: BTreeSet<&str> = factor_order.iter().map(String::as_str).collect();
    for def in &goals.factors {
        if !in_rules.contains(def.id.as_str()) {
            catalog.push(def.clone());
        }
    }

    let mut nodes: Vec<CausalNode> = factor_order.iter().map(CausalNode::factor).collect();
    nodes.extend(
        problem_order
            .iter()
            .chain(&link_intermediates)
            .map(|id| CausalNode::intermediate(id.as_str(), Aggregation::WeightedMean, DEFAULT_NOISE_SIGMA)),
    );
    nodes.extend(goals.goals.iter().map(|g| {
        CausalNode::goal(g.id.as_str(), g.polarity, Aggregation::WeightedMean, DEFAULT_NOISE_SIGMA)
    }));

    let all_unweighted = goals.goals.iter().all(|g| g.weight.is_none());
    let equal = 1.0 / goals.goals.len().max(1) as f64;
    let goal_weights = goals
        .goals
        .iter()
        .map(|g| {
            let w = match g.weight {
                Some(w) => w,
                None if all_unweighted => equal,
                None => 0.0,
            };
            (g.id.clone(), w)
        })
        .collect();

    Ok(CausalModel {
        schema_version: MODEL_SCHEMA_VERSION,
        factors: catalog,
        nodes,
        edges,
        goal_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::causal::NodeRole;
    use crate::model::validate::{validate_model, FindingCode};
    use crate::rules::{extract_factors, parse_rules};

    fn cost_goal_via_productivity() -> GoalDeclarations {
        GoalDeclarations {
            goals: vec![GoalDeclaration {
                id: "project_costs".into(),
                polarity: Polarity::Cost,
                weight: Some(1.0),
            }],
            links: vec![
                GoalLink {
                    source: "communication_problems".into(),
                    target: "productivity".into(),
                    sign: Sign::Negative,
                    weight: None,
                },
                GoalLink {
                    source: "productivity".into(),
                    target: "project_costs".into(),
                    sign: Sign::Positive,
                    weight: None,
                },
            ],
            factors: vec![],
        }
    }

    fn edge<'a>(m: &'a CausalModel, s: &str, t: &str) -> &'a CausalEdge {
        m.edges
            .iter()
            .find(|e| e.source == s && e.target == t)
            .unwrap_or_else(|| panic!("missing edge {s}->{t}"))
    }

    #[test]
    fn barrier_rule_structure() {
        let rules = parse_rules(
            "(cultural_differences) & !(common_working_history) -> communication_problems",
        )
        .unwrap();
        let m = derive_causal_skeleton(&rules, &cost_goal_via_productivity()).unwrap();
        assert_eq!(edge(&m, "cultural_differences", "communication_problems").sign, Sign::Positive);
        assert_eq!(
            edge(&m, "common_working_history", "communication_problems").sign,
            Sign::Negative
        );
        assert_eq!(edge(&m, "communication_problems", "productivity").sign, Sign::Negative);
        assert_eq!(edge(&m, "productivity", "project_costs").sign, Sign::Positive);
        assert_eq!(m.edges.len(), 4);
        assert_eq!(m.node("communication_problems").unwrap().role, NodeRole::Intermediate);
        assert_eq!(m.node("productivity").unwrap().role, NodeRole::Intermediate);
        assert_eq!(m.node("project_costs").unwrap().role, NodeRole::Goal);
        for e in &m.edges {
            assert_eq!(e.weight, 0.66);
        }
        let comm = m.node("communication_problems").unwrap();
        assert_eq!(comm.aggregation, Some(Aggregation::WeightedMean));
        assert_eq!(comm.noise_sigma, Some(0.15));
        assert_eq!(validate_model(&m), vec![]);
    }

    #[test]
    fn empty_rules_leave_only_goals() {
        let m = derive_causal_skeleton(&RuleSet::default(), &cost_goal_via_productivity()).unwrap();
        assert_eq!(m.nodes.len(), 1);
        assert_eq!(m.nodes[0].id, "project_costs");
        let codes: Vec<FindingCode> = validate_model(&m).into_iter().map(|f| f.code).collect();
        assert!(codes.contains(&FindingCode::NoFactors));
    }

    #[test]
    fn shared_factor_is_one_node() {
        let rules = parse_rules(
            "time_zone_difference & coupling -> communication_problems\n\
             time_zone_difference -> late_shifts",
        )
        .unwrap();
        let mut goals = cost_goal_via_productivity();
        goals.links.push(GoalLink {
            source: "late_shifts".into(),
            target: "project_costs".into(),
            sign: Sign::Positive,
            weight: Some(0.33),
        });
        let m = derive_causal_skeleton(&rules, &goals).unwrap();
        let tz_nodes = m.nodes.iter().filter(|n| n.id == "time_zone_difference").count();
        assert_eq!(tz_nodes, 1);
        assert_eq!(m.children("time_zone_difference").count(), 2);

        let factor_nodes: BTreeSet<String> = m.factor_nodes().map(|n| n.id.clone()).collect();
        let mut union = BTreeSet::new();
        for r in &rules.rules {
            union.extend(r.condition.factors());
        }
        assert_eq!(factor_nodes, union);
        assert_eq!(factor_nodes, extract_factors(&rules));
    }

    #[test]
    fn unlinked_problem_rejected() {
        let rules = parse_rules("turnover -> knowledge_loss").unwrap();
        assert_eq!(
            derive_causal_skeleton(&rules, &cost_goal_via_productivity()),
            Err(SkeletonError::UnlinkedProblem("knowledge_loss".into()))
        );
    }

    #[test]
    fn declared_factor_definitions_used() {
        let rules = parse_rules("cultural_differences -> communication_problems").unwrap();
        let mut goals = cost_goal_via_productivity();
        goals.factors.push(FactorDefinition::new(
            "cultural_differences",
            FactorScope::SitePair,
            FactorKind::Ordinal,
        ));
        let m = derive_causal_skeleton(&rules, &goals).unwrap();
        assert_eq!(m.factors.get("cultural_differences").unwrap().scope, FactorScope::SitePair);
    }

    #[test]
    fn unweighted_goals_share_equally() {
        let rules = parse_rules("a -> p").unwrap();
        let goals = GoalDeclarations {
            goals: vec![
                GoalDeclaration { id: "cost".into(), polarity: Polarity::Cost, weight: None },
                GoalDeclaration { id: "quality".into(), polarity: Polarity::Benefit, weight: None },
            ],
            links: vec![
                GoalLink { source: "p".into(), target: "cost".into(), sign: Sign::Positive, weight: None },
                GoalLink { source: "p".into(), target: "quality".into(), sign: Sign::Negative, weight: None },
            ],
            factors: vec![],
        };
        let m = derive_causal_skeleton(&rules, &goals).unwrap();
        assert_eq!(m.goal_weights["cost"], 0.5);
        assert_eq!(validate_model(&m), vec![]);
    }
}
