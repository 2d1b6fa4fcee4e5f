use serde::{Deserialize, Serialize};

use crate::model::{Assignment, CausalModel, CouplingRule, ProjectCharacterization};
use crate::optimizer::{SimulationSettings, SuggestionList, DEFAULT_EXHAUSTIVE_LIMIT};
use crate::pipeline::{suggest, Error};
use crate::risk::RiskReport;

use super::xml::json_to_xml;
use super::{from_value, model_hash, parse_value, to_json, IoError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordSettings {
    #[serde(default)]
    pub coupling: CouplingRule,
    pub exhaustive_limit: u64,
}

impl Default for RecordSettings {
    fn default() -> Self {
        RecordSettings {
            coupling: CouplingRule::default(),
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
        }
    }
}

/// Self-contained, replayable account of one allocation decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionRecord {
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub model_hash: String,
    pub model: CausalModel,
    pub characterization: ProjectCharacterization,
    pub settings: RecordSettings,
    pub runs: u64,
    pub seed: u64,
    pub suggestions: SuggestionList,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected: Option<Assignment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub risk_report: Option<RiskReport>,
    /// Rule file text the risk report was computed from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<String>,
}

impl DecisionRecord {
    pub fn new(
        model: CausalModel,
        characterization: ProjectCharacterization,
        settings: RecordSettings,
        suggestions: SuggestionList,
    ) -> Self {
        DecisionRecord {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: None,
            model_hash: model_hash(&model),
            runs: suggestions.runs,
            seed: suggestions.seed,
            model,
            characterization,
            settings,
            suggestions,
            selected: None,
            risk_report: None,
            rules: None,
        }
    }

    pub fn simulation_settings(&self) -> SimulationSettings {
        SimulationSettings {
            runs: self.runs,
            seed: self.seed,
            exhaustive_limit: self.settings.exhaustive_limit,
        }
    }

    /// Fails when the embedded model does not hash to `model_hash`.
    pub fn verify(&self) -> Result<(), IoError> {
        let actual = model_hash(&self.model);
        if actual != self.model_hash {
            return Err(IoError::HashMismatch {
                recorded: self.model_hash.clone(),
                actual,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Json,
    Xml,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ExportFormat::Json),
            "xml" => Ok(ExportFormat::Xml),
            other => Err(format!("unknown format `{other}`, expected json or xml")),
        }
    }
}

pub fn export_decision(record: &DecisionRecord, format: ExportFormat) -> Result<String, IoError> {
    match format {
        ExportFormat::Json => Ok(to_json(record)),
        ExportFormat::Xml => {
            let tree = serde_json::to_value(record).map_err(|e| IoError::Io {
                path: "decision record".into(),
                message: e.to_string(),
            })?;
            json_to_xml("decision_record", &tree)
        }
    }
}

pub fn decision_from_json(text: &str) -> Result<DecisionRecord, IoError> {
    from_value(parse_value(text)?)
}

/// Outcome of re-running a record's simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub suggestions: SuggestionList,
    pub matches: bool,
}

/// Re-runs the simulation from the record's model, characterization, seed and run count.
pub fn replay_decision(record: &DecisionRecord) -> Result<Replay, Error> {
    record.verify()?;
    let suggestions = suggest(
        &record.model,
        &record.characterization,
        &record.settings.coupling,
        &record.simulation_settings(),
    )?;
    Ok(Replay {
        matches: suggestions == record.suggestions,
        suggestions,
    })
}
