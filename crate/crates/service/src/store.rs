//! Documents on disk, one directory per kind.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use worksplit_core::io::{
    decision_from_json, read_model, read_project, to_json, write_model, write_project, DecisionRecord,
};
use worksplit_core::model::{CausalModel, ProjectCharacterization};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Model,
    Project,
    Rules,
    Suggestion,
    Decision,
}

impl Kind {
    fn dir(self) -> &'static str {
        match self {
            Kind::Model => "models",
            Kind::Project => "projects",
            Kind::Rules => "rules",
            Kind::Suggestion => "suggestions",
            Kind::Decision => "decisions",
        }
    }

    fn extension(self) -> &'static str {
        match self {
            Kind::Model => "model.json",
            Kind::Project => "project.json",
            Kind::Rules => "grl",
            Kind::Suggestion | Kind::Decision => "decision.json",
        }
    }

    pub fn noun(self) -> &'static str {
        match self {
            Kind::Model => "model",
            Kind::Project => "project",
            Kind::Rules => "rule set",
            Kind::Suggestion => "suggestion",
            Kind::Decision => "decision",
        }
    }
}

/// File-backed document store. Writers serialize on one lock; reads go straight to disk.
pub struct Store {
    root: PathBuf,
    write: Mutex<()>,
}

fn io_error(path: &Path, e: std::io::Error) -> ApiError {
    ApiError::internal(format!("{}: {e}", path.display()))
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, ApiError> {
        let root = root.into();
        for kind in [Kind::Model, Kind::Project, Kind::Rules, Kind::Suggestion, Kind::Decision] {
            let dir = root.join(kind.dir());
            fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        }
        Ok(Store {
            root,
            write: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Held across read-check-write sequences such as conditional updates.
    pub fn lock(&self) -> MutexGuard<'_, ()> {
        self.write.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn path(&self, kind: Kind, id: &str) -> Result<PathBuf, ApiError> {
        if !valid_id(id) {
            return Err(ApiError::not_found(kind.noun(), id));
        }
        Ok(self.root.join(kind.dir()).join(format!("{id}.{}", kind.extension())))
    }

    fn existing(&self, kind: Kind, id: &str) -> Result<PathBuf, ApiError> {
        let path = self.path(kind, id)?;
        if path.is_file() {
            Ok(path)
        } else {
            Err(ApiError::not_found(kind.noun(), id))
        }
    }

    pub fn contains(&self, kind: Kind, id: &str) -> bool {
        self.existing(kind, id).is_ok()
    }

    pub fn read_model(&self, id: &str) -> Result<CausalModel, ApiError> {
        Ok(read_model(self.existing(Kind::Model, id)?)?)
    }

    pub fn write_model(&self, id: &str, model: &CausalModel) -> Result<(), ApiError> {
        Ok(write_model(self.path(Kind::Model, id)?, model)?)
    }

    pub fn read_project(&self, id: &str) -> Result<ProjectCharacterization, ApiError> {
        Ok(read_project(self.existing(Kind::Project, id)?)?)
    }

    pub fn write_project(&self, id: &str, project: &ProjectCharacterization) -> Result<(), ApiError> {
        Ok(write_project(self.path(Kind::Project, id)?, project)?)
    }

    pub fn read_text(&self, kind: Kind, id: &str) -> Result<String, ApiError> {
        let path = self.existing(kind, id)?;
        fs::read_to_string(&path).map_err(|e| io_error(&path, e))
    }

    pub fn write_text(&self, kind: Kind, id: &str, text: &str) -> Result<(), ApiError> {
        let path = self.path(kind, id)?;
        fs::write(&path, text).map_err(|e| io_error(&path, e))
    }

    pub fn read_record(&self, kind: Kind, id: &str) -> Result<DecisionRecord, ApiError> {
        Ok(decision_from_json(&self.read_text(kind, id)?)?)
    }

    pub fn write_record(&self, kind: Kind, id: &str, record: &DecisionRecord) -> Result<(), ApiError> {
        self.write_text(kind, id, &to_json(record))
    }
}
