use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of states on the ordinal scale.
pub const LEVEL_COUNT: usize = 5;

/// Five-point ordinal scale used for every factor valuation, node state and cost level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrdinalLevel {
    VeryLow,
    Low,
    Medium,
    High,
    VeryHigh,
}

impl OrdinalLevel {
    pub const ALL: [OrdinalLevel; LEVEL_COUNT] = [
        OrdinalLevel::VeryLow,
        OrdinalLevel::Low,
        OrdinalLevel::Medium,
        OrdinalLevel::High,
        OrdinalLevel::VeryHigh,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Numeric image on `[0, 1]`: `index / 4`.
    pub fn image(self) -> f64 {
        self.index() as f64 / (LEVEL_COUNT - 1) as f64
    }

    /// Level `k` maps to level `4 - k`.
    pub fn invert(self) -> Self {
        Self::ALL[LEVEL_COUNT - 1 - self.index()]
    }

    /// Nearest level to a value on `[0, 1]`. Exact midpoints round toward `Medium`.
    pub fn nearest(value: f64) -> Self {
        let scaled = value.clamp(0.0, 1.0) * (LEVEL_COUNT - 1) as f64;
        let lower = scaled.floor();
        let frac = scaled - lower;
        let lower = lower as usize;
        if lower >= LEVEL_COUNT - 1 {
            return OrdinalLevel::VeryHigh;
        }
        const TIE: f64 = 1e-9;
        let index = if (frac - 0.5).abs() <= TIE {
            // tie: the neighbour closer to the middle of the scale wins
            let mid = (LEVEL_COUNT - 1) / 2;
            if lower < mid {
                lower + 1
            } else {
                lower
            }
        } else if frac > 0.5 {
            lower + 1
        } else {
            lower
        };
        Self::ALL[index]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OrdinalLevel::VeryLow => "very_low",
            OrdinalLevel::Low => "low",
            OrdinalLevel::Medium => "medium",
            OrdinalLevel::High => "high",
            OrdinalLevel::VeryHigh => "very_high",
        }
    }
}

impl fmt::Display for OrdinalLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OrdinalLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown level `{s}`"))
    }
}

/// A characterization value: ordinal for ordinal factors, truth value for boolean ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FactorValue {
    Bool(bool),
    Level(OrdinalLevel),
}

impl FactorValue {
    /// Embedding onto the ordinal scale; booleans map to the two extremes.
    pub fn as_level(self) -> OrdinalLevel {
        match self {
            FactorValue::Level(l) => l,
            FactorValue::Bool(true) => OrdinalLevel::VeryHigh,
            FactorValue::Bool(false) => OrdinalLevel::VeryLow,
        }
    }

    pub fn image(self) -> f64 {
        self.as_level().image()
    }
}

impl fmt::Display for FactorValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorValue::Bool(b) => write!(f, "{b}"),
            FactorValue::Level(l) => write!(f, "{l}"),
        }
    }
}

impl From<OrdinalLevel> for FactorValue {
    fn from(level: OrdinalLevel) -> Self {
        FactorValue::Level(level)
    }
}

impl From<bool> for FactorValue {
    fn from(b: bool) -> Self {
        FactorValue::Bool(b)
    }
}
