#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use worksplit_core::bayes::{BayesianNetwork, Evidence, StateDistribution};
use worksplit_core::io::{read_model, read_project};
use worksplit_core::model::{
    Aggregation, CausalEdge, CausalModel, CausalNode, FactorCatalog, FactorDefinition, FactorKind, FactorScope,
    FactorValue, OrdinalLevel, Polarity, ProjectCharacterization, Sign, Task, LEVEL_COUNT,
};
use worksplit_core::rules::{Comparator, Condition, RiskRule, RuleSet, Severity};
use worksplit_core::optimizer::SampledCosts;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn load(model: &str, project: &str) -> (CausalModel, ProjectCharacterization) {
    (
        read_model(fixture(model)).unwrap(),
        read_project(fixture(project)).unwrap(),
    )
}

/// Language differences raise communication problems, which
/// lower productivity, which drives project costs.
pub fn cost_chain(sigma: f64) -> CausalModel {
    CausalModel {
        factors: FactorCatalog::new(vec![FactorDefinition::new(
            "language_differences",
            FactorScope::Site,
            FactorKind::Ordinal,
        )]),
        nodes: vec![
            CausalNode::factor("language_differences"),
            CausalNode::intermediate("communication_problems", Aggregation::WeightedMean, sigma),
            CausalNode::intermediate("productivity", Aggregation::WeightedMean, sigma),
            CausalNode::goal("project_costs", Polarity::Cost, Aggregation::WeightedMean, sigma),
        ],
        edges: vec![
            CausalEdge::new("language_differences", "communication_problems", Sign::Positive, 1.0),
            CausalEdge::new("communication_problems", "productivity", Sign::Negative, 0.66),
            CausalEdge::new("productivity", "project_costs", Sign::Negative, 1.0),
        ],
        goal_weights: BTreeMap::from([("project_costs".to_string(), 1.0)]),
        ..CausalModel::default()
    }
}

const AGGREGATIONS: [Aggregation; 3] = [Aggregation::WeightedMean, Aggregation::Minimum, Aggregation::Maximum];
const SIGMAS: [f64; 4] = [0.0, 0.1, 0.15, 0.3];

/// Random valid model with at most `max_nodes` nodes. Factor `f{i}`, intermediate `m{i}`,
/// goal `g{i}`; every non-factor node draws one to three parents among earlier non-goal nodes.
pub fn random_model(rng: &mut impl Rng, max_nodes: usize) -> CausalModel {
    let total = rng.random_range(3..=max_nodes.max(3));
    let goals = rng.random_range(1..=2.min(total - 2));
    let factors = rng.random_range(1..=(total - goals).min(3));
    let intermediates = total - goals - factors;
    let mut nodes = Vec::new();
    let mut defs = Vec::new();
    for i in 0..factors {
        let id = format!("f{i}");
        let kind = if rng.random_bool(0.25) { FactorKind::Boolean } else { FactorKind::Ordinal };
        defs.push(FactorDefinition::new(&id, FactorScope::Project, kind));
        nodes.push(CausalNode::factor(&id));
    }
    let mut edges = Vec::new();
    let mut pool: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
    let add_parents = |id: &str, pool: &[String], edges: &mut Vec<CausalEdge>, rng: &mut dyn rand::RngCore| {
        let k = rng.random_range(1..=pool.len().min(3));
        let mut chosen: Vec<&String> = pool.iter().collect();
        chosen.shuffle(rng);
        for p in chosen.into_iter().take(k) {
            let sign = if rng.random_bool(0.5) { Sign::Positive } else { Sign::Negative };
            let weight = [0.33, 0.66, 1.0, rng.random_range(0.05..1.0)][rng.random_range(0..4)];
            edges.push(CausalEdge::new(p.clone(), id, sign, weight));
        }
    };
    for i in 0..intermediates {
        let id = format!("m{i}");
        let agg = AGGREGATIONS[rng.random_range(0..3)];
        nodes.push(CausalNode::intermediate(&id, agg, SIGMAS[rng.random_range(0..4)]));
        add_parents(&id, &pool, &mut edges, rng);
        pool.push(id);
    }
    let mut goal_weights = BTreeMap::new();
    for i in 0..goals {
        let id = format!("g{i}");
        let polarity = if rng.random_bool(0.5) { Polarity::Cost } else { Polarity::Benefit };
        let agg = AGGREGATIONS[rng.random_range(0..3)];
        nodes.push(CausalNode::goal(&id, polarity, agg, SIGMAS[rng.random_range(0..4)]));
        add_parents(&id, &pool, &mut edges, rng);
        goal_weights.insert(id, 1.0 / goals as f64);
    }
    CausalModel {
        factors: FactorCatalog::new(defs),
        nodes,
        edges,
        goal_weights,
        ..CausalModel::default()
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Marginals by summing the full joint over all `5^n` states. `None` when the evidence has
/// zero probability.
pub fn brute_force_marginals(net: &BayesianNetwork, evidence: &Evidence) -> Option<Vec<StateDistribution>> {
    let n = net.len();
    let fixed: Vec<Option<usize>> = net
        .variables
        .iter()
        .map(|v| evidence.get(&v.id).map(|l| l.index()))
        .collect();
    let mut marginals = vec![[0.0; LEVEL_COUNT]; n];
    let mut state = vec![0usize; n];
    let total_states = LEVEL_COUNT.pow(n as u32);
    let mut z = 0.0;
    for code in 0..total_states {
        let mut c = code;
        for slot in state.iter_mut().rev() {
            *slot = c % LEVEL_COUNT;
            c /= LEVEL_COUNT;
        }
        if fixed.iter().zip(&state).any(|(f, s)| f.is_some_and(|f| f != *s)) {
            continue;
        }
        let mut p = 1.0;
        for v in 0..n {
            let row = net
                .parent_indices(v)
                .iter()
                .fold(0, |acc, &q| acc * LEVEL_COUNT + state[q]);
            p *= net.cpts[v].rows[row][state[v]];
            if p == 0.0 {
                break;
            }
        }
        if p == 0.0 {
            continue;
        }
        z += p;
        for v in 0..n {
            marginals[v][state[v]] += p;
        }
    }
    if z <= 0.0 {
        return None;
    }
    for m in &mut marginals {
        m.iter_mut().for_each(|x| *x /= z);
    }
    Some(marginals)
}

/// Random evidence on the roots, the way cost queries clamp factors.
pub fn random_root_evidence(net: &BayesianNetwork, rng: &mut impl Rng, p_clamp: f64) -> Evidence {
    let mut evidence = Evidence::new();
    for v in net.roots() {
        if rng.random_bool(p_clamp) {
            let level = if v.boolean {
                [OrdinalLevel::VeryLow, OrdinalLevel::VeryHigh][rng.random_range(0..2)]
            } else {
                OrdinalLevel::ALL[rng.random_range(0..LEVEL_COUNT)]
            };
            evidence.insert(v.id.clone(), level);
        }
    }
    evidence
}

/// Random solver instance: level-image costs, random availability with at least one site per
/// task, random coupling.
pub fn random_costs(rng: &mut impl Rng, tasks: usize, sites: usize) -> SampledCosts {
    let image = |rng: &mut dyn rand::RngCore| OrdinalLevel::ALL[rng.random_range(0..LEVEL_COUNT)].image();
    let mut exec = Vec::with_capacity(tasks);
    for _ in 0..tasks {
        let forced = rng.random_range(0..sites);
        let row: Vec<Option<f64>> = (0..sites)
            .map(|s| {
                if s == forced || rng.random_bool(0.7) {
                    let effort = [1.0, 1.0, 2.0, 0.5][rng.random_range(0..4)];
                    Some(effort * image(rng))
                } else {
                    None
                }
            })
            .collect();
        exec.push(row);
    }
    let mut coupled = Vec::new();
    for t in 0..tasks {
        for u in t + 1..tasks {
            if rng.random_bool(0.4) {
                coupled.push((t, u));
            }
        }
    }
    let slots = sites * (sites - 1) / 2;
    let comm = coupled.iter().map(|_| (0..slots).map(|_| image(rng)).collect()).collect();
    SampledCosts {
        exec,
        coupled,
        comm,
        sites,
        seed: 0,
        run: 0,
    }
}

/// Every feasible assignment with its total, by plain nested enumeration.
pub fn enumerate_assignments(c: &SampledCosts) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut current = vec![0usize; c.exec.len()];
    fn rec(c: &SampledCosts, t: usize, current: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, f64)>) {
        if t == c.exec.len() {
            let mut total = 0.0;
            for (task, &s) in current.iter().enumerate() {
                total += c.exec[task][s].unwrap();
            }
            for (p, &(a, b)) in c.coupled.iter().enumerate() {
                let (sa, sb) = (current[a], current[b]);
                if sa != sb {
                    let (i, j) = (sa.min(sb), sa.max(sb));
                    let k = (0..i).map(|r| c.sites - r - 1).sum::<usize>() + (j - i - 1);
                    total += c.comm[p][k];
                }
            }
            out.push((current.clone(), total));
            return;
        }
        for s in 0..c.sites {
            if c.exec[t][s].is_some() {
                current[t] = s;
                rec(c, t + 1, current, out);
            }
        }
    }
    rec(c, 0, &mut current, &mut out);
    out
}

/// Random condition over `factors`, at most `depth` levels of nesting.
pub fn random_condition(rng: &mut impl Rng, factors: &[&str], depth: usize) -> Condition {
    let pick = |rng: &mut dyn rand::RngCore| factors[rng.random_range(0..factors.len())];
    if depth == 0 || rng.random_bool(0.4) {
        let f = pick(rng);
        return if rng.random_bool(0.3) {
            Condition::factor(f)
        } else {
            let cmp = [Comparator::AtLeast, Comparator::AtMost, Comparator::Equal][rng.random_range(0..3)];
            Condition::predicate(f, cmp, OrdinalLevel::ALL[rng.random_range(0..LEVEL_COUNT)])
        };
    }
    match rng.random_range(0..3) {
        0 => Condition::not(random_condition(rng, factors, depth - 1)),
        k => {
            let n = rng.random_range(2..4);
            let children = (0..n).map(|_| random_condition(rng, factors, depth - 1)).collect();
            if k == 1 {
                Condition::And(children)
            } else {
                Condition::Or(children)
            }
        }
    }
}

pub struct RiskCase {
    pub catalog: FactorCatalog,
    pub project: ProjectCharacterization,
    pub rules: RuleSet,
}

/// Characterization with a factor of every scope fully valued, random availability and
/// coupling, and rules over random subsets of the factors.
pub fn random_risk_case(rng: &mut impl Rng) -> RiskCase {
    let defs = [
        ("maturity", FactorScope::Project, FactorKind::Ordinal),
        ("labor_cost", FactorScope::Site, FactorKind::Ordinal),
        ("complexity", FactorScope::Task, FactorKind::Ordinal),
        ("expertise", FactorScope::TaskSite, FactorKind::Ordinal),
        ("coupling", FactorScope::TaskPair, FactorKind::Ordinal),
        ("cultural_differences", FactorScope::SitePair, FactorKind::Ordinal),
        ("common_working_history", FactorScope::SitePair, FactorKind::Boolean),
    ];
    let catalog = FactorCatalog::new(defs.iter().map(|&(id, s, k)| FactorDefinition::new(id, s, k)).collect());
    let tasks: Vec<Task> = (0..rng.random_range(1..=5)).map(|i| Task::new(format!("task{i}"))).collect();
    let sites: Vec<String> = (0..rng.random_range(1..=4)).map(|i| format!("site{i}")).collect();
    let mut project = ProjectCharacterization::new(tasks, sites);
    for t in 0..project.tasks.len() {
        let forced = rng.random_range(0..project.sites.len());
        for s in 0..project.sites.len() {
            project.availability[t][s] = s == forced || rng.random_bool(0.7);
        }
    }
    for def in catalog.iter() {
        for binding in project.required_bindings(def.scope) {
            let value: FactorValue = match def.kind {
                FactorKind::Boolean => rng.random_bool(0.5).into(),
                FactorKind::Ordinal => OrdinalLevel::ALL[rng.random_range(0..LEVEL_COUNT)].into(),
            };
            project.values.set(&def.id, binding, value);
        }
    }
    let ids: Vec<&str> = defs.iter().map(|d| d.0).collect();
    let rules = (0..rng.random_range(1..=6))
        .map(|i| {
            let mut pool = ids.clone();
            pool.shuffle(rng);
            pool.truncate(rng.random_range(1..=3));
            RiskRule {
                id: format!("r{}", i + 1),
                condition: random_condition(rng, &pool, 3),
                problem: ["rework", "delay", "mistrust"][rng.random_range(0..3)].to_string(),
                severity: [Severity::Low, Severity::Medium, Severity::High][rng.random_range(0..3)],
            }
        })
        .collect();
    RiskCase {
        catalog,
        project,
        rules: RuleSet::new(rules),
    }
}

/// Uniformly random feasible assignment, as site indices.
pub fn random_assignment(rng: &mut impl Rng, project: &ProjectCharacterization) -> Vec<usize> {
    (0..project.tasks.len())
        .map(|t| {
            let sites = project.available_sites(t);
            sites[rng.random_range(0..sites.len())]
        })
        .collect()
}

/// Opens one random site to every task (valuing the new task-site bindings) and returns the
/// assignment that puts all tasks there.
pub fn co_locate(rng: &mut impl Rng, case: &mut RiskCase) -> Vec<usize> {
    let p = &mut case.project;
    let s = rng.random_range(0..p.sites.len());
    for t in 0..p.tasks.len() {
        if !p.availability[t][s] {
            p.availability[t][s] = true;
            let binding = worksplit_core::model::Binding::task_site(&p.tasks[t].id, &p.sites[s]);
            p.values.set("expertise", binding, OrdinalLevel::ALL[rng.random_range(0..LEVEL_COUNT)]);
        }
    }
    vec![s; p.tasks.len()]
}
