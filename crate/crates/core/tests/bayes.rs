mod common;

use proptest::prelude::*;
use rand::Rng;

use common::{brute_force_marginals, cost_chain, random_model, random_root_evidence, seeded};
use worksplit_core::bayes::{
    compile_network, cpt_from_function, infer_marginals, infer_posterior, infer_with_order, BayesError, Evidence,
};
use worksplit_core::model::{Aggregation, CausalEdge, Sign, OrdinalLevel};

fn point(level: OrdinalLevel) -> [f64; 5] {
    let mut p = [0.0; 5];
    p[level.index()] = 1.0;
    p
}

#[test]
fn cost_chain_chain_deterministic_composition() {
    let net = compile_network(&cost_chain(0.0)).unwrap();
    for (input, expect) in [
        (OrdinalLevel::VeryHigh, OrdinalLevel::VeryHigh),
        (OrdinalLevel::VeryLow, OrdinalLevel::VeryLow),
        (OrdinalLevel::Low, OrdinalLevel::Low),
    ] {
        let evidence = Evidence::from([("language_differences".to_string(), input)]);
        let post = infer_posterior(&net, &evidence).unwrap();
        assert_eq!(post.get("project_costs").unwrap(), &point(expect));
        let brute = brute_force_marginals(&net, &evidence).unwrap();
        let idx = net.index_of("project_costs").unwrap();
        assert_eq!(brute[idx], point(expect));
    }
}

#[test]
fn evidence_on_query_is_point_mass() {
    let net = compile_network(&cost_chain(0.15)).unwrap();
    let evidence = Evidence::from([("productivity".to_string(), OrdinalLevel::Low)]);
    let post = infer_marginals(&net, &evidence, &["productivity"]).unwrap();
    assert_eq!(post.get("productivity").unwrap(), &point(OrdinalLevel::Low));
}

#[test]
fn uniform_root_through_identity_edge() {
    let mut model = cost_chain(0.0);
    model.nodes.truncate(2);
    model.nodes.push(worksplit_core::model::CausalNode::goal(
        "project_costs",
        worksplit_core::model::Polarity::Cost,
        Aggregation::WeightedMean,
        0.0,
    ));
    model.edges = vec![CausalEdge::new("language_differences", "project_costs", Sign::Positive, 1.0)];
    model.nodes.remove(1);
    let net = compile_network(&model).unwrap();
    let post = infer_posterior(&net, &Evidence::new()).unwrap();
    for p in post.get("project_costs").unwrap() {
        assert!((p - 0.2).abs() < 1e-12);
    }
}

#[test]
fn impossible_evidence_is_rejected() {
    let net = compile_network(&cost_chain(0.0)).unwrap();
    let evidence = Evidence::from([
        ("language_differences".to_string(), OrdinalLevel::VeryHigh),
        ("communication_problems".to_string(), OrdinalLevel::VeryLow),
    ]);
    assert_eq!(
        infer_marginals(&net, &evidence, &["project_costs"]).unwrap_err(),
        BayesError::InconsistentEvidence
    );
    assert_eq!(
        infer_marginals(&net, &evidence, &["communication_problems"]).unwrap_err(),
        BayesError::InconsistentEvidence
    );
}

#[test]
fn unknown_variable() {
    let net = compile_network(&cost_chain(0.1)).unwrap();
    let err = infer_marginals(&net, &Evidence::new(), &["nope"]).unwrap_err();
    assert_eq!(err.code(), "UNKNOWN_VARIABLE");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cpt_rows_are_distributions(seed in any::<u64>()) {
        let model = random_model(&mut seeded(seed), 8);
        let net = compile_network(&model).unwrap();
        for cpt in &net.cpts {
            prop_assert_eq!(cpt.rows.len(), 5usize.pow(cpt.parents.len() as u32));
            for row in &cpt.rows {
                prop_assert!(row.iter().all(|&p| p >= 0.0));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn elimination_matches_enumeration(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let model = random_model(&mut rng, 6);
        let net = compile_network(&model).unwrap();
        let evidence = random_root_evidence(&net, &mut rng, 0.6);
        let brute = brute_force_marginals(&net, &evidence).unwrap();
        let post = infer_posterior(&net, &evidence).unwrap();
        for (v, var) in net.variables.iter().enumerate() {
            let got = post.get(&var.id).unwrap();
            for k in 0..5 {
                prop_assert!((got[k] - brute[v][k]).abs() < 1e-9, "{} state {}: {} vs {}", var.id, k, got[k], brute[v][k]);
            }
            prop_assert!((got.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn elimination_order_does_not_matter(seed in any::<u64>(), shuffle in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = seeded(seed);
        let model = random_model(&mut rng, 8);
        let net = compile_network(&model).unwrap();
        let evidence = random_root_evidence(&net, &mut rng, 0.5);
        let ids: Vec<&str> = net.variables.iter().map(|v| v.id.as_str()).collect();
        let greedy = infer_marginals(&net, &evidence, &ids).unwrap();
        let mut order: Vec<usize> = (0..net.len()).collect();
        order.shuffle(&mut seeded(shuffle));
        let shuffled = infer_with_order(&net, &evidence, &ids, Some(&order)).unwrap();
        for id in &ids {
            let (a, b) = (greedy.get(id).unwrap(), shuffled.get(id).unwrap());
            for k in 0..5 {
                prop_assert!((a[k] - b[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn raising_a_parent_moves_child_with_edge_sign(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let model = random_model(&mut rng, 7);
        let net = compile_network(&model).unwrap();
        for edge in &model.edges {
            // clamp every parent of the child so only the varied edge acts
            let mut evidence = Evidence::new();
            for e in model.parents(&edge.target) {
                evidence.insert(e.source.clone(), OrdinalLevel::ALL[rng.random_range(0..5)]);
            }
            let mut previous: Option<f64> = None;
            for level in OrdinalLevel::ALL {
                evidence.insert(edge.source.clone(), level);
                let e = match infer_marginals(&net, &evidence, &[edge.target.as_str()]) {
                    Ok(post) => post.expectation(&edge.target).unwrap(),
                    Err(BayesError::InconsistentEvidence) => continue,
                    Err(other) => panic!("{other}"),
                };
                if let Some(prev) = previous {
                    match edge.sign {
                        Sign::Positive => prop_assert!(e >= prev - 1e-9, "{} -> {}: {} < {}", edge.source, edge.target, e, prev),
                        Sign::Negative => prop_assert!(e <= prev + 1e-9, "{} -> {}: {} > {}", edge.source, edge.target, e, prev),
                    }
                }
                previous = Some(e);
            }
        }
    }
}

#[test]
fn cpt_from_function_examples() {
    let parents = vec![worksplit_core::bayes::ParentEdge::new("a", Sign::Positive, 1.0)];
    let identity = cpt_from_function("g", Aggregation::WeightedMean, &parents, 0.0).unwrap();
    for (k, row) in identity.rows.iter().enumerate() {
        assert_eq!(*row, point(OrdinalLevel::ALL[k]));
    }
    assert_eq!(
        cpt_from_function("g", Aggregation::Minimum, &[], 0.0).unwrap_err().code(),
        "NO_PARENTS"
    );
}
