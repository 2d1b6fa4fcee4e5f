use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::model::{Aggregation, OrdinalLevel, Sign, LEVEL_COUNT};

use super::BayesError;

/// Probability vector over the five ordinal states.
pub type StateDistribution = [f64; LEVEL_COUNT];

/// Bin edges around the level images, truncated to `[0, 1]`.
const BIN_EDGES: [f64; LEVEL_COUNT + 1] = [0.0, 0.125, 0.375, 0.625, 0.875, 1.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentEdge {
    pub id: String,
    pub sign: Sign,
    pub weight: f64,
}

impl ParentEdge {
    pub fn new(id: impl Into<String>, sign: Sign, weight: f64) -> Self {
        ParentEdge {
            id: id.into(),
            sign,
            weight,
        }
    }
}

/// Conditional probability table. Row `r` encodes the joint parent state with the first
/// parent as the most significant base-5 digit; roots have a single prior row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub variable: String,
    pub parents: Vec<String>,
    pub rows: Vec<StateDistribution>,
}

impl Cpt {
    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    /// Parent states of row `r`, first parent first.
    pub fn row_states(&self, r: usize) -> Vec<OrdinalLevel> {
        decode_row(r, self.parents.len())
    }

    pub fn row_index(states: &[OrdinalLevel]) -> usize {
        states
            .iter()
            .fold(0, |acc, s| acc * LEVEL_COUNT + s.index())
    }

    /// One CSV line per joint parent state: parent states, then the five probabilities.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut header: Vec<String> = self.parents.clone();
        header.extend(OrdinalLevel::ALL.iter().map(|l| format!("p_{l}")));
        out.push_str(&header.join(","));
        out.push('\n');
        for (r, row) in self.rows.iter().enumerate() {
            let mut cells: Vec<String> = self.row_states(r).iter().map(|s| s.to_string()).collect();
            cells.extend(row.iter().map(|p| format!("{p}")));
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

fn decode_row(mut r: usize, parents: usize) -> Vec<OrdinalLevel> {
    let mut states = vec![OrdinalLevel::VeryLow; parents];
    for slot in states.iter_mut().rev() {
        *slot = OrdinalLevel::ALL[r % LEVEL_COUNT];
        r /= LEVEL_COUNT;
    }
    states
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Spreads a deterministic value over the five levels with a bell kernel of standard deviation
/// `sigma`, truncated to `[0, 1]` and renormalized. `sigma == 0` puts all mass on the nearest
/// level (midpoints toward medium).
pub fn level_distribution(value: f64, sigma: f64) -> StateDistribution {
    let mut out = [0.0; LEVEL_COUNT];
    if sigma <= 0.0 {
        out[OrdinalLevel::nearest(value).index()] = 1.0;
        return out;
    }
    for (k, slot) in out.iter_mut().enumerate() {
        let lo = std_normal_cdf((BIN_EDGES[k] - value) / sigma);
        let hi = std_normal_cdf((BIN_EDGES[k + 1] - value) / sigma);
        *slot = (hi - lo).max(0.0);
    }
    let total: f64 = out.iter().sum();
    if total > 0.0 && total.is_finite() {
        out.iter_mut().for_each(|p| *p /= total);
    } else {
        out = [0.0; LEVEL_COUNT];
        out[OrdinalLevel::nearest(value).index()] = 1.0;
    }
    out
}

/// Deterministic node value for one joint parent state.
pub fn aggregate(aggregation: Aggregation, parents: &[ParentEdge], states: &[OrdinalLevel]) -> f64 {
    let images = parents.iter().zip(states).map(|(p, s)| match p.sign {
        Sign::Positive => s.image(),
        Sign::Negative => 1.0 - s.image(),
    });
    match aggregation {
        Aggregation::WeightedMean => {
            let (num, den) = images
                .zip(parents)
                .fold((0.0, 0.0), |(n, d), (x, p)| (n + p.weight * x, d + p.weight));
            num / den
        }
        Aggregation::Minimum => images.fold(f64::INFINITY, f64::min),
        Aggregation::Maximum => images.fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Builds the table of a node from its aggregation function, signed weighted parents and noise.
pub fn cpt_from_function(
    variable: impl Into<String>,
    aggregation: Aggregation,
    parents: &[ParentEdge],
    noise_sigma: f64,
) -> Result<Cpt, BayesError> {
    let variable = variable.into();
    if parents.is_empty() {
        return Err(BayesError::NoParents(variable));
    }
    if let Some(p) = parents.iter().find(|p| !(p.weight > 0.0 && p.weight.is_finite())) {
        return Err(BayesError::InvalidWeight {
            variable,
            parent: p.id.clone(),
            weight: p.weight,
        });
    }
    let row_count = LEVEL_COUNT.pow(parents.len() as u32);
    let rows = (0..row_count)
        .map(|r| {
            let states = decode_row(r, parents.len());
            level_distribution(aggregate(aggregation, parents, &states), noise_sigma)
        })
        .collect();
    Ok(Cpt {
        variable,
        parents: parents.iter().map(|p| p.id.clone()).collect(),
        rows,
    })
}
