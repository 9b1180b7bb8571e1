use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;

pub type ServiceResult<T> = Result<T, ServiceError>;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),

    #[error("bad request: {0}")]
    BadRequest(String),

    #[error("expected state {expected}, session is {actual}")]
    InvalidState { expected: String, actual: String },

    #[error("rejected: {0}")]
    Rejected(String),

    #[error("storage failure: {0}")]
    Io(String),

    #[error(transparent)]
    Core(#[from] radshade_core::Error),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::InvalidState { .. } => StatusCode::CONFLICT,
            ServiceError::Rejected(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Io(_) | ServiceError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::InvalidState { .. } => "invalid_state",
            ServiceError::Rejected(_) => "rejected",
            ServiceError::Io(_) => "io",
            ServiceError::Core(_) => "internal",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.kind(), "reason": self.to_string() });
        (self.status(), Json(body)).into_response()
    }
}
