use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize};

use super::catalog::FactorCatalog;

/// Version written to and accepted from model files.
pub const MODEL_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_NOISE_SIGMA: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeRole {
    Factor,
    Intermediate,
    Goal,
}

/// Whether a high goal value is desirable (`Benefit`) or not (`Cost`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Benefit,
    Cost,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    WeightedMean,
    Minimum,
    Maximum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Positive,
    #[serde(rename = "-")]
    Negative,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Positive => "+",
            Sign::Negative => "-",
        })
    }
}

/// Named edge-weight presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightPreset {
    Low,
    Medium,
    High,
}

impl WeightPreset {
    pub fn value(self) -> f64 {
        match self {
            WeightPreset::Low => 0.33,
            WeightPreset::Medium => 0.66,
            WeightPreset::High => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalNode {
    pub id: String,
    pub role: NodeRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarity: Option<Polarity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregation: Option<Aggregation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
}

impl CausalNode {
    pub fn factor(id: impl Into<String>) -> Self {
        CausalNode {
            id: id.into(),
            role: NodeRole::Factor,
            polarity: None,
            aggregation: None,
            noise_sigma: None,
        }
    }

    pub fn intermediate(id: impl Into<String>, aggregation: Aggregation, noise_sigma: f64) -> Self {
        CausalNode {
            id: id.into(),
            role: NodeRole::Intermediate,
            polarity: None,
            aggregation: Some(aggregation),
            noise_sigma: Some(noise_sigma),
        }
    }

    pub fn goal(
        id: impl Into<String>,
        polarity: Polarity,
        aggregation: Aggregation,
        noise_sigma: f64,
    ) -> Self {
        CausalNode {
            id: id.into(),
            role: NodeRole::Goal,
            polarity: Some(polarity),
            aggregation: Some(aggregation),
            noise_sigma: Some(noise_sigma),
        }
    }

    pub fn effective_aggregation(&self) -> Aggregation {
        self.aggregation.unwrap_or(Aggregation::WeightedMean)
    }

    pub fn effective_noise(&self) -> f64 {
        self.noise_sigma.unwrap_or(DEFAULT_NOISE_SIGMA)
    }

    /// Goals without an explicit polarity are treated as costs.
    pub fn effective_polarity(&self) -> Polarity {
        self.polarity.unwrap_or(Polarity::Cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalEdge {
    pub source: String,
    pub target: String,
    pub sign: Sign,
    #[serde(deserialize_with = "deserialize_weight")]
    pub weight: f64,
}

impl CausalEdge {
    pub fn new(source: impl Into<String>, target: impl Into<String>, sign: Sign, weight: f64) -> Self {
        CausalEdge {
            source: source.into(),
            target: target.into(),
            sign,
            weight,
        }
    }
}

fn deserialize_weight<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Weight {
        Value(f64),
        Preset(WeightPreset),
    }
    Ok(match Weight::deserialize(deserializer)? {
        Weight::Value(v) => v,
        Weight::Preset(p) => p.value(),
    })
}

/// Organization-specific DAG of factors, intermediate problems and goals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CausalModel {
    pub schema_version: u32,
    pub factors: FactorCatalog,
    pub nodes: Vec<CausalNode>,
    pub edges: Vec<CausalEdge>,
    pub goal_weights: BTreeMap<String, f64>,
}

impl Default for CausalModel {
    fn default() -> Self {
        CausalModel {
            schema_version: MODEL_SCHEMA_VERSION,
            factors: FactorCatalog::default(),
            nodes: Vec::new(),
            edges: Vec::new(),
            goal_weights: BTreeMap::new(),
        }
    }
}

impl CausalModel {
    pub fn node(&self, id: &str) -> Option<&CausalNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn goals(&self) -> impl Iterator<Item = &CausalNode> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Goal)
    }

    pub fn factor_nodes(&self) -> impl Iterator<Item = &CausalNode> {
        self.nodes.iter().filter(|n| n.role == NodeRole::Factor)
    }

    /// Incoming edges of `id`, in file order.
    pub fn parents<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a CausalEdge> + 'a {
        self.edges.iter().filter(move |e| e.target == id)
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a CausalEdge> + 'a {
        self.edges.iter().filter(move |e| e.source == id)
    }

    pub fn edge_mut(&mut self, source: &str, target: &str) -> Option<&mut CausalEdge> {
        self.edges
            .iter_mut()
            .find(|e| e.source == source && e.target == target)
    }

    pub fn node_mut(&mut self, id: &str) -> Option<&mut CausalNode> {
        self.nodes.iter_mut().find(|n| n.id == id)
    }
}
