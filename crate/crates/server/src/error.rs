use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use distaf_core::report::ReportError;
use distaf_core::store::StoreError;
use serde::Serialize;

use crate::users::UserError;

/// Error body: `{"error": ..., "current_revision": ...}`.
#[derive(Debug, Serialize)]
struct Body {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    current_revision: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    unscored: Option<Vec<String>>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    message: String,
    current_revision: Option<u64>,
    unscored: Option<Vec<String>>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            current_revision: None,
            unscored: None,
        }
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "authentication required")
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, message)
    }

    pub fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            error: self.message,
            current_revision: self.current_revision,
            unscored: self.unscored,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        use StoreError::*;
        let status = match &err {
            UnknownAssessment(_) => StatusCode::NOT_FOUND,
            DuplicateId(_) | NotDraft { .. } | RevisionConflict { .. } => StatusCode::CONFLICT,
            InvalidId(_) | InvalidDocument(_) => StatusCode::BAD_REQUEST,
            UnknownTemplate(_)
            | UnknownPredecessor(_)
            | TemplateMismatch(_)
            | UnknownCode(_)
            | UnknownMechanism(_)
            | UnknownStandard(_)
            | IncompleteAssessment { .. }
            | Scoring(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Storage { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut api = ApiError::new(status, err.to_string());
        match err {
            RevisionConflict { current, .. } => api.current_revision = Some(current),
            IncompleteAssessment { unscored, .. } => api.unscored = Some(unscored),
            Storage { .. } => tracing::error!("{api:?}"),
            _ => {}
        }
        api
    }
}

impl From<ReportError> for ApiError {
    fn from(err: ReportError) -> Self {
        let status = match err {
            ReportError::UnknownPillar(_) | ReportError::UnsupportedFormat(_) => {
                StatusCode::BAD_REQUEST
            }
            ReportError::TemplateMismatch(_) | ReportError::Scoring(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ReportError::Serialize(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, err.to_string())
    }
}

impl From<UserError> for ApiError {
    fn from(err: UserError) -> Self {
        let status = match err {
            UserError::DuplicateUsername(_) | UserError::AdminExists => StatusCode::CONFLICT,
            UserError::UnknownUser(_) => StatusCode::NOT_FOUND,
            UserError::InvalidUsername(_) | UserError::WeakPassword => StatusCode::BAD_REQUEST,
            UserError::WrongPassword => StatusCode::FORBIDDEN,
            UserError::Hash(_) | UserError::Storage { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, err.to_string())
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
