//! File formats: models, projects, rule files and decision records.

mod record;
mod xml;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{CausalModel, GoalDeclarations, ProjectCharacterization, MODEL_SCHEMA_VERSION};
use crate::rules::{format_rules, parse_rules, RuleError, RuleSet};

pub use record::{
    decision_from_json, export_decision, replay_decision, DecisionRecord, ExportFormat, RecordSettings, Replay,
};
pub use xml::json_to_xml;

pub const PROJECT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("schema error at {locus}: {message}")]
    Schema { locus: String, message: String },
    #[error("model hash mismatch: record says {recorded}, embedded model hashes to {actual}")]
    HashMismatch { recorded: String, actual: String },
    #[error(transparent)]
    Rules(#[from] RuleError),
}

impl IoError {
    pub fn code(&self) -> &'static str {
        match self {
            IoError::Io { .. } => "IO_ERROR",
            IoError::Schema { .. } => "SCHEMA_ERROR",
            IoError::HashMismatch { .. } => "HASH_MISMATCH",
            IoError::Rules(e) => e.code(),
        }
    }

    fn schema(locus: impl Into<String>, message: impl Into<String>) -> Self {
        IoError::Schema {
            locus: locus.into(),
            message: message.into(),
        }
    }
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Deserializes with the failing path as locus (`$` for the document root).
pub fn from_value<T: DeserializeOwned>(value: Value) -> Result<T, IoError> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let locus = if path == "." { "$".to_string() } else { format!("$.{path}") };
        IoError::schema(locus, e.into_inner().to_string())
    })
}

fn parse_value(text: &str) -> Result<Value, IoError> {
    serde_json::from_str(text)
        .map_err(|e| IoError::schema(format!("line {} column {}", e.line(), e.column()), e.to_string()))
}

fn check_version(value: &mut Value, expected: u32, required: bool) -> Result<(), IoError> {
    let Some(obj) = value.as_object_mut() else {
        return Err(IoError::schema("$", "expected a JSON object"));
    };
    match obj.get("schema_version") {
        None if required => Err(IoError::schema("$.schema_version", "missing schema_version")),
        None => Ok(()),
        Some(v) if v.as_u64() == Some(expected as u64) => Ok(()),
        Some(v) => Err(IoError::schema(
            "$.schema_version",
            format!("unsupported schema_version {v}, expected {expected}"),
        )),
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("domain types serialize");
    text.push('\n');
    text
}

pub fn parse_model(text: &str) -> Result<CausalModel, IoError> {
    let mut value = parse_value(text)?;
    check_version(&mut value, MODEL_SCHEMA_VERSION, true)?;
    from_value(value)
}

pub fn read_model(path: impl AsRef<Path>) -> Result<CausalModel, IoError> {
    parse_model(&read_text(path.as_ref())?)
}

pub fn write_model(path: impl AsRef<Path>, model: &CausalModel) -> Result<(), IoError> {
    write_text(path.as_ref(), &to_json(model))
}

#[derive(Serialize)]
struct ProjectFile<'a> {
    schema_version: u32,
    #[serde(flatten)]
    project: &'a ProjectCharacterization,
}

/// Project documents carry `schema_version` on disk; it may be omitted on input.
pub fn project_to_json(project: &ProjectCharacterization) -> String {
    to_json(&ProjectFile {
        schema_version: PROJECT_SCHEMA_VERSION,
        project,
    })
}

pub fn parse_project(text: &str) -> Result<ProjectCharacterization, IoError> {
    let mut value = parse_value(text)?;
    check_version(&mut value, PROJECT_SCHEMA_VERSION, false)?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("schema_version");
    }
    from_value(value)
}

pub fn read_project(path: impl AsRef<Path>) -> Result<ProjectCharacterization, IoError> {
    parse_project(&read_text(path.as_ref())?)
}

pub fn write_project(path: impl AsRef<Path>, project: &ProjectCharacterization) -> Result<(), IoError> {
    write_text(path.as_ref(), &project_to_json(project))
}

pub fn read_rules(path: impl AsRef<Path>) -> Result<RuleSet, IoError> {
    Ok(parse_rules(&read_text(path.as_ref())?)?)
}

pub fn write_rules(path: impl AsRef<Path>, rules: &RuleSet) -> Result<(), IoError> {
    write_text(path.as_ref(), &format_rules(rules))
}

pub fn parse_goals(text: &str) -> Result<GoalDeclarations, IoError> {
    from_value(parse_value(text)?)
}

pub fn read_goals(path: impl AsRef<Path>) -> Result<GoalDeclarations, IoError> {
    parse_goals(&read_text(path.as_ref())?)
}

/// Reads any JSON document into a domain type.
pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T, IoError> {
    from_value(parse_value(&read_text(path.as_ref())?)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), IoError> {
    write_text(path.as_ref(), &to_json(value))
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&Value::String(k.clone()).to_string());
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, v) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(v, out);
            }
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

/// Compact JSON with object keys sorted; the basis of content hashes.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let tree = serde_json::to_value(value).expect("domain types serialize");
    let mut out = String::new();
    write_canonical(&tree, &mut out);
    out
}

/// `sha256:<hex>` over the canonical JSON form.
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let digest = Sha256::digest(canonical_json(value).as_bytes());
    format!("sha256:{}", hex::encode(digest))
}

pub fn model_hash(model: &CausalModel) -> String {
    content_hash(model)
}

pub fn project_hash(project: &ProjectCharacterization) -> String {
    content_hash(project)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Binding, OrdinalLevel, Task};

    #[test]
    fn unknown_schema_version_rejected() {
        let err = parse_model(r#"{"schema_version": 999, "factors": [], "nodes": [], "edges": [], "goal_weights": {}}"#)
            .unwrap_err();
        assert_eq!(err.code(), "SCHEMA_ERROR");
        let err = parse_project(r#"{"schema_version": 999, "tasks": [], "sites": [], "availability": []}"#).unwrap_err();
        assert_eq!(err.code(), "SCHEMA_ERROR");
    }

    #[test]
    fn schema_error_carries_path() {
        let err = parse_model(
            r#"{"schema_version": 1, "factors": [], "nodes": [{"id": "a", "role": "wizard"}], "edges": [], "goal_weights": {}}"#,
        )
        .unwrap_err();
        match err {
            IoError::Schema { locus, .. } => assert!(locus.starts_with("$.nodes[0]"), "{locus}"),
            other => panic!("{other:?}"),
        }
        let err = parse_model(r#"{"schema_version": 1, "factors": [], "nodes": [], "edges": [], "goal_weights": {}, "extra": 1}"#)
            .unwrap_err();
        assert!(err.to_string().contains("extra"));
    }

    #[test]
    fn project_round_trip_with_version() {
        let mut p = ProjectCharacterization::new(vec![Task::new("a").with_effort(2.0)], vec!["x".into()]);
        p.values.set("coupling", Binding::Project, OrdinalLevel::High);
        let text = project_to_json(&p);
        assert!(text.contains("\"schema_version\": 1"));
        assert_eq!(parse_project(&text).unwrap(), p);
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let v: Value = serde_json::from_str(r#"{"b": 1, "a": {"d": [1, 2], "c": null}}"#).unwrap();
        assert_eq!(canonical_json(&v), r#"{"a":{"c":null,"d":[1,2]},"b":1}"#);
        let h = content_hash(&v);
        assert!(h.starts_with("sha256:"));
        assert_eq!(h.len(), 7 + 64);
    }

    #[test]
    fn io_error_on_missing_file() {
        let err = read_model("/nonexistent/x.model.json").unwrap_err();
        assert_eq!(err.code(), "IO_ERROR");
    }
}
