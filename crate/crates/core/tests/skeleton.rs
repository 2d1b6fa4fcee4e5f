mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::Rng;

use common::{fixture, random_condition, seeded};
use worksplit_core::bayes::compile_network;
use worksplit_core::io::{read_goals, read_rules};
use worksplit_core::model::{
    derive_causal_skeleton, validate_model, FindingCode, GoalDeclaration, GoalDeclarations, GoalLink, NodeRole,
    Polarity, Sign,
};
use worksplit_core::rules::{extract_factors, parse_rules, RiskRule, RuleSet, Severity};

const BARRIER_RULE: &str = "(cultural_differences) & !(common_working_history) -> communication_problems\n";

fn link(source: &str, target: &str, sign: Sign) -> GoalLink {
    GoalLink {
        source: source.into(),
        target: target.into(),
        sign,
        weight: None,
    }
}

fn signed_edges(model: &worksplit_core::model::CausalModel) -> BTreeSet<(String, String, Sign)> {
    model.edges.iter().map(|e| (e.source.clone(), e.target.clone(), e.sign)).collect()
}

#[test]
fn barrier_rule_yields_the_risk_model_structure() {
    let rules = parse_rules(BARRIER_RULE).unwrap();
    let goals = GoalDeclarations {
        goals: vec![GoalDeclaration {
            id: "project_costs".into(),
            polarity: Polarity::Cost,
            weight: Some(1.0),
        }],
        links: vec![
            link("communication_problems", "productivity", Sign::Negative),
            link("productivity", "project_costs", Sign::Negative),
        ],
        factors: vec![],
    };
    let model = derive_causal_skeleton(&rules, &goals).unwrap();
    let role = |id: &str| model.node(id).unwrap().role;
    assert_eq!(role("cultural_differences"), NodeRole::Factor);
    assert_eq!(role("common_working_history"), NodeRole::Factor);
    assert_eq!(role("communication_problems"), NodeRole::Intermediate);
    assert_eq!(role("productivity"), NodeRole::Intermediate);
    assert_eq!(role("project_costs"), NodeRole::Goal);
    assert_eq!(model.nodes.len(), 5);
    let expected: BTreeSet<(String, String, Sign)> = [
        ("cultural_differences", "communication_problems", Sign::Positive),
        ("common_working_history", "communication_problems", Sign::Negative),
        ("communication_problems", "productivity", Sign::Negative),
        ("productivity", "project_costs", Sign::Negative),
    ]
    .into_iter()
    .map(|(a, b, s)| (a.to_string(), b.to_string(), s))
    .collect();
    assert_eq!(signed_edges(&model), expected);
    assert!(validate_model(&model).is_empty(), "{:?}", validate_model(&model));
    compile_network(&model).unwrap();
}

#[test]
fn fixture_skeleton_compiles() {
    let rules = read_rules(fixture("interfaces.grl")).unwrap();
    let goals = read_goals(fixture("interfaces.goals.json")).unwrap();
    let model = derive_causal_skeleton(&rules, &goals).unwrap();
    assert!(validate_model(&model).is_empty(), "{:?}", validate_model(&model));
    let factors: BTreeSet<String> = model.factors.iter().map(|f| f.id.clone()).collect();
    assert!(extract_factors(&rules).is_subset(&factors));
    // declared factor definitions carry over
    assert_eq!(
        model.factors.get("common_working_history").unwrap().kind,
        worksplit_core::model::FactorKind::Boolean
    );
    compile_network(&model).unwrap();
}

#[test]
fn unlinked_problem_is_reported() {
    let rules = parse_rules("a & b -> orphan_problem\n").unwrap();
    let goals = GoalDeclarations {
        goals: vec![GoalDeclaration {
            id: "project_costs".into(),
            polarity: Polarity::Cost,
            weight: None,
        }],
        ..GoalDeclarations::default()
    };
    assert_eq!(derive_causal_skeleton(&rules, &goals).unwrap_err().code(), "UNLINKED_PROBLEM");
}

fn random_rules(rng: &mut impl Rng) -> RuleSet {
    const FACTORS: [&str; 5] = ["distance", "churn", "trust", "coupling", "maturity"];
    const PROBLEMS: [&str; 3] = ["rework", "delay", "mistrust"];
    let rules = (0..rng.random_range(1..=5))
        .map(|i| RiskRule {
            id: format!("r{}", i + 1),
            condition: random_condition(rng, &FACTORS, 3),
            problem: PROBLEMS[rng.random_range(0..PROBLEMS.len())].to_string(),
            severity: Severity::Medium,
        })
        .collect();
    RuleSet::new(rules)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn skeleton_factors_are_the_rule_factors(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let rules = random_rules(&mut rng);
        let problems: BTreeSet<&str> = rules.rules.iter().map(|r| r.problem.as_str()).collect();
        let goal_count = rng.random_range(1..=2);
        let goals = GoalDeclarations {
            goals: (0..goal_count)
                .map(|g| GoalDeclaration { id: format!("goal{g}"), polarity: Polarity::Cost, weight: None })
                .collect(),
            links: problems
                .iter()
                .flat_map(|p| (0..goal_count).map(move |g| link(p, &format!("goal{g}"), Sign::Positive)))
                .collect(),
            factors: vec![],
        };
        let model = derive_causal_skeleton(&rules, &goals).unwrap();
        let factor_nodes: BTreeSet<String> =
            model.nodes.iter().filter(|n| n.role == NodeRole::Factor).map(|n| n.id.clone()).collect();
        prop_assert_eq!(&factor_nodes, &extract_factors(&rules));
        let catalog: BTreeSet<String> = model.factors.iter().map(|f| f.id.clone()).collect();
        prop_assert_eq!(&catalog, &factor_nodes);
        for f in validate_model(&model) {
            prop_assert_eq!(f.code, FindingCode::WeightsNotNormalized, "{}", f);
        }
        // every factor feeds exactly the problems of the rules that mention it
        for e in model.edges.iter().filter(|e| factor_nodes.contains(&e.source)) {
            prop_assert!(rules.rules.iter().any(|r| r.problem == e.target && r.condition.factors().contains(&e.source)));
        }
        prop_assert!(compile_network(&model).is_ok());
    }
}
