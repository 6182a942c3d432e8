use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use kisan_core::{FieldError, KisanError};
use serde::Serialize;

/// Error response: `{"error": <code>, "fields": [{field, message}, ...]}`.
/// Every 4xx carries at least one field entry.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub fields: Vec<FieldError>,
}

#[derive(Serialize)]
struct Body<'a> {
    error: &'a str,
    fields: &'a [FieldError],
}

impl ApiError {
    pub fn validation(fields: Vec<FieldError>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "validation_failed",
            fields,
        }
    }

    pub fn field(field: &str, message: impl Into<String>) -> Self {
        Self::validation(vec![FieldError::new(field, message)])
    }

    pub fn not_found(field: &str, message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            fields: vec![FieldError::new(field, message)],
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            fields: vec![FieldError::new("server", message)],
        }
    }

    /// Maps a core error raised while handling a request whose input
    /// field is `field`.
    pub fn from_core(err: KisanError, field: &str) -> Self {
        match err {
            KisanError::Validation(fields) => Self::validation(fields),
            KisanError::UnknownCategory { .. }
            | KisanError::InvalidInput(_)
            | KisanError::ArityMismatch { .. }
            | KisanError::Empty(_) => Self::field(field, err.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            error: self.code,
            fields: &self.fields,
        };
        (self.status, Json(serde_json::to_value(&body).unwrap_or_default())).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
