use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use empnet_core::session::StoreError;
use empnet_core::CoreError;
use serde::{Deserialize, Serialize};

/// JSON error body. `field` names the offending input for 422s; `incident`
/// ties a 500 to the server log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incident: Option<String>,
    /// Where to look next, e.g. the inconsistency report.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub see: Option<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("{}: {}", .0.code, .0.message)]
pub struct ApiError(pub ErrorBody);

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self(ErrorBody { status: status.as_u16(), code: code.into(), message: message.into(), field: None, incident: None, see: None })
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        let mut e = Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", message);
        e.0.field = Some(field.into());
        e
    }

    pub fn see(mut self, href: impl Into<String>) -> Self {
        self.0.see = Some(href.into());
        self
    }

    /// 500 with a fresh incident id; the details go to the log only.
    pub fn internal(detail: &str) -> Self {
        let incident = uuid::Uuid::new_v4().to_string();
        tracing::error!(%incident, "{detail}");
        let mut e = Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "internal failure; quote the incident id");
        e.0.incident = Some(incident);
        e
    }

    pub fn status(&self) -> StatusCode {
        StatusCode::from_u16(self.0.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Invalid { field, reason } => Self::invalid(field.clone(), format!("invalid {field}: {reason}")),
            CoreError::Dimension(_) => {
                let mut a = Self::new(StatusCode::UNPROCESSABLE_ENTITY, "dimension", e.to_string());
                a.0.field = Some("body".into());
                a
            }
            CoreError::Infeasible(_) | CoreError::Unbounded | CoreError::TargetConflict { .. } => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "infeasible", e.to_string())
            }
            CoreError::Precondition(_) => Self::new(StatusCode::CONFLICT, "precondition", e.to_string()),
            CoreError::Phase(_) => Self::new(StatusCode::CONFLICT, "phase", e.to_string()),
            CoreError::Storage(s) => s.into(),
            CoreError::Solver { .. } | CoreError::NoConvergence { .. } | CoreError::Internal(_) => Self::internal(&e.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => Self::not_found("unknown session"),
            StoreError::Exists(_) => Self::new(StatusCode::CONFLICT, "exists", "a session with this id already exists"),
            StoreError::Locked(_) => Self::new(StatusCode::CONFLICT, "locked", "the session is locked by another writer"),
            StoreError::Io { .. } | StoreError::Corrupt { .. } | StoreError::Version { .. } => Self::internal(&e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        crate::json_response(self.status(), &self.0)
    }
}
