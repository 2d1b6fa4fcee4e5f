use std::collections::HashMap;

use serde::Serialize;

use crate::model::{validate_model, CausalModel, FactorKind, FindingCode, NodeRole, LEVEL_COUNT};

use super::cpt::{cpt_from_function, Cpt, ParentEdge, StateDistribution};
use super::BayesError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteVariable {
    pub id: String,
    pub role: NodeRole,
    /// Boolean factors only ever occupy the two extreme states.
    pub boolean: bool,
}

/// Discrete network with the structure of a causal model; every variable has the five
/// ordinal states in the same order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BayesianNetwork {
    pub variables: Vec<DiscreteVariable>,
    /// One table per variable, index-aligned with `variables`.
    pub cpts: Vec<Cpt>,
    pub topological_order: Vec<usize>,
    #[serde(skip)]
    pub(crate) parents: Vec<Vec<usize>>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl BayesianNetwork {
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn variable(&self, id: &str) -> Option<&DiscreteVariable> {
        self.index_of(id).map(|i| &self.variables[i])
    }

    pub fn cpt(&self, id: &str) -> Option<&Cpt> {
        self.index_of(id).map(|i| &self.cpts[i])
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn parent_indices(&self, var: usize) -> &[usize] {
        &self.parents[var]
    }

    pub fn roots(&self) -> impl Iterator<Item = &DiscreteVariable> {
        self.variables
            .iter()
            .zip(&self.parents)
            .filter(|(_, p)| p.is_empty())
            .map(|(v, _)| v)
    }

    /// CSV audit dump of every table, separated by `# <variable>` header lines.
    pub fn cpts_csv(&self) -> String {
        self.cpts
            .iter()
            .map(|c| format!("# {}\n{}", c.variable, c.to_csv()))
            .collect()
    }

    /// Membership mask of the seeds and all their ancestors.
    pub(crate) fn ancestors_of(&self, seeds: impl IntoIterator<Item = usize>) -> Vec<bool> {
        let mut keep = vec![false; self.len()];
        let mut stack: Vec<usize> = seeds.into_iter().collect();
        while let Some(v) = stack.pop() {
            if !keep[v] {
                keep[v] = true;
                stack.extend(self.parents[v].iter().copied());
            }
        }
        keep
    }
}

fn uniform_over(states: &[usize]) -> StateDistribution {
    let mut row = [0.0; LEVEL_COUNT];
    for &s in states {
        row[s] = 1.0 / states.len() as f64;
    }
    row
}

/// Compiles a valid causal model. Goal-weight findings are ignored here since weights do not
/// enter the network.
pub fn compile_network(model: &CausalModel) -> Result<BayesianNetwork, BayesError> {
    let blocking: Vec<_> = validate_model(model)
        .into_iter()
        .filter(|f| {
            !matches!(
                f.code,
                FindingCode::WeightsNotNormalized | FindingCode::GoalWeightKeys
            )
        })
        .collect();
    if !blocking.is_empty() {
        return Err(BayesError::InvalidModel(blocking));
    }

    let index: HashMap<String, usize> = model
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id.clone(), i))
        .collect();
    let mut variables = Vec::with_capacity(model.nodes.len());
    let mut cpts = Vec::with_capacity(model.nodes.len());
    let mut parents = Vec::with_capacity(model.nodes.len());
    for node in &model.nodes {
        let incoming: Vec<ParentEdge> = model
            .parents(&node.id)
            .map(|e| ParentEdge::new(e.source.as_str(), e.sign, e.weight))
            .collect();
        let boolean = node.role == NodeRole::Factor
            && model
                .factors
                .get(&node.id)
                .is_some_and(|f| f.kind == FactorKind::Boolean);
        let cpt = if incoming.is_empty() {
            let states: Vec<usize> = if boolean {
                vec![0, LEVEL_COUNT - 1]
            } else {
                (0..LEVEL_COUNT).collect()
            };
            Cpt {
                variable: node.id.clone(),
                parents: vec![],
                rows: vec![uniform_over(&states)],
            }
        } else {
            cpt_from_function(
                node.id.as_str(),
                node.effective_aggregation(),
                &incoming,
                node.effective_noise(),
            )?
        };
        parents.push(incoming.iter().map(|p| index[&p.id]).collect::<Vec<_>>());
        variables.push(DiscreteVariable {
            id: node.id.clone(),
            role: node.role,
            boolean,
        });
        cpts.push(cpt);
    }

    // Kahn's algorithm; validity guarantees acyclicity
    let n = variables.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p].push(v);
        }
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&v| indegree[v] == 0).collect();
    let mut topological_order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        topological_order.push(v);
        for &c in children[v].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }

    Ok(BayesianNetwork {
        variables,
        cpts,
        topological_order,
        parents,
        index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Aggregation, CausalEdge, CausalNode, FactorCatalog, FactorDefinition, FactorScope, Polarity,
        Sign,
    };
    use std::collections::BTreeMap;

    fn cost_chain() -> CausalModel {
        CausalModel {
            factors: FactorCatalog::new(vec![FactorDefinition::new(
                "language_differences",
                FactorScope::Site,
                FactorKind::Ordinal,
            )]),
            nodes: vec![
                CausalNode::factor("language_differences"),
                CausalNode::intermediate("communication_problems", Aggregation::WeightedMean, 0.15),
                CausalNode::intermediate("productivity", Aggregation::WeightedMean, 0.15),
                CausalNode::goal("project_costs", Polarity::Cost, Aggregation::WeightedMean, 0.15),
            ],
            edges: vec![
                CausalEdge::new("language_differences", "communication_problems", Sign::Positive, 1.0),
                CausalEdge::new("communication_problems", "productivity", Sign::Negative, 0.66),
                CausalEdge::new("productivity", "project_costs", Sign::Positive, 1.0),
            ],
            goal_weights: BTreeMap::from([("project_costs".to_string(), 1.0)]),
            ..CausalModel::default()
        }
    }

    #[test]
    fn cost_chain_compiles_to_chain() {
        let net = compile_network(&cost_chain()).unwrap();
        assert_eq!(net.len(), 4);
        let non_roots = net.cpts.iter().filter(|c| !c.parents.is_empty()).count();
        assert_eq!(non_roots, 3);
        let roots: Vec<&str> = net.roots().map(|v| v.id.as_str()).collect();
        assert_eq!(roots, vec!["language_differences"]);
        assert_eq!(net.topological_order, vec![0, 1, 2, 3]);
        for cpt in &net.cpts {
            assert_eq!(cpt.row_count(), LEVEL_COUNT.pow(cpt.parents.len() as u32));
        }
    }

    #[test]
    fn invalid_model_rejected() {
        let mut m = cost_chain();
        m.edges.push(CausalEdge::new("project_costs", "productivity", Sign::Positive, 1.0));
        assert!(matches!(compile_network(&m), Err(BayesError::InvalidModel(_))));
    }

    #[test]
    fn boolean_root_prior_on_extremes() {
        let mut m = cost_chain();
        m.factors = FactorCatalog::new(vec![FactorDefinition::new(
            "language_differences",
            FactorScope::Site,
            FactorKind::Boolean,
        )]);
        let net = compile_network(&m).unwrap();
        assert_eq!(net.cpts[0].rows[0], [0.5, 0.0, 0.0, 0.0, 0.5]);
        assert!(net.variables[0].boolean);
    }

    #[test]
    fn csv_dump_covers_all_tables() {
        let net = compile_network(&cost_chain()).unwrap();
        let csv = net.cpts_csv();
        assert_eq!(csv.matches("# ").count(), 4);
    }
}
