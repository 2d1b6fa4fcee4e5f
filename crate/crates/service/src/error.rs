use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use worksplit_core::bayes::BayesError;
use worksplit_core::cost::CostError;
use worksplit_core::io::IoError;
use worksplit_core::model::Finding;
use worksplit_core::rules::RuleError;
use worksplit_core::Error;

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub findings: Option<Vec<Finding>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub locus: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current_hash: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                findings: None,
                locus: None,
                line: None,
                column: None,
                current_hash: None,
            },
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", format!("no {kind} with id `{id}`"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }

    pub fn findings(code: &str, findings: Vec<Finding>) -> Self {
        let mut e = Self::bad_request(code, format!("{} finding(s)", findings.len()));
        e.body.findings = Some(findings);
        e
    }

    pub fn conflict(current_hash: String) -> Self {
        let mut e = Self::new(
            StatusCode::CONFLICT,
            "HASH_MISMATCH",
            "base_hash does not match the stored document",
        );
        e.body.current_hash = Some(current_hash);
        e
    }
}

impl From<RuleError> for ApiError {
    fn from(e: RuleError) -> Self {
        let mut out = ApiError::bad_request(e.code(), e.to_string());
        if let Some((line, column)) = e.position() {
            out.body.line = Some(line);
            out.body.column = Some(column);
        }
        out
    }
}

impl From<IoError> for ApiError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Schema { ref locus, .. } => {
                let mut out = ApiError::bad_request(e.code(), e.to_string());
                out.body.locus = Some(locus.clone());
                out
            }
            IoError::Rules(r) => r.into(),
            IoError::HashMismatch { .. } => ApiError::new(StatusCode::CONFLICT, e.code(), e.to_string()),
            IoError::Io { .. } => ApiError::internal(e.to_string()),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::Bayes(BayesError::InvalidModel(f)) | Error::Cost(CostError::Inference(BayesError::InvalidModel(f))) => {
                ApiError::findings("INVALID_MODEL", f)
            }
            Error::Cost(CostError::InvalidCharacterization(f)) => ApiError::findings("INVALID_CHARACTERIZATION", f),
            Error::Rule(r) => r.into(),
            Error::Io(io) => io.into(),
            other => ApiError::bad_request(other.code(), other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
