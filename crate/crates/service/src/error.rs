use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};

use gradecast::cart::CartError;
use gradecast::eval::EvalError;
use gradecast::ingest::IngestError;
use gradecast::whatif::WhatIfError;

/// Error body returned by every endpoint: `{code, message, detail?}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
                detail: None,
            },
        }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = Some(detail);
        self
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "validation", message)
    }

    pub fn invalid_json(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_json", message)
    }

    pub fn not_found(kind: &str, id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no {kind} with id `{id}`"),
        )
        .with_detail(json!({ "id": id }))
    }

    pub fn store(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", message)
    }

    pub fn code(&self) -> &str {
        &self.body.code
    }
}

impl std::fmt::Display for ApiError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} ({}): {}",
            self.status.as_u16(),
            self.body.code,
            self.body.message
        )
    }
}

impl std::error::Error for ApiError {}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<IngestError> for ApiError {
    fn from(e: IngestError) -> Self {
        let mut err = Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string());
        let detail = match &e {
            IngestError::MissingColumn { column }
            | IngestError::UnexpectedColumn { column }
            | IngestError::DuplicateColumn { column } => Some(json!({ "column": column })),
            IngestError::OutOfRange { row, column, .. } => {
                Some(json!({ "row": row, "column": column }))
            }
            _ => e.row().map(|row| json!({ "row": row })),
        };
        err.body.detail = detail;
        err
    }
}

impl From<CartError> for ApiError {
    fn from(e: CartError) -> Self {
        match e {
            CartError::InvalidParams(m) => Self::validation(m),
            CartError::Format(m) => Self::store(format!("stored model is unreadable: {m}")),
            other => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "training_failed",
                other.to_string(),
            ),
        }
    }
}

impl From<EvalError> for ApiError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Config(m) => Self::validation(m),
            EvalError::Predict(inner) => inner.into(),
            other => Self::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "training_failed",
                other.to_string(),
            ),
        }
    }
}

impl From<WhatIfError> for ApiError {
    fn from(e: WhatIfError) -> Self {
        match e {
            WhatIfError::Config(m) => Self::validation(m),
            WhatIfError::Predict(inner) => match inner {
                CartError::Domain(m) => Self::validation(m),
                other => other.into(),
            },
        }
    }
}
