use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// Body of every rejected request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                field: None,
            },
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.body.field = Some(field.into());
        self
    }

    pub fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UNKNOWN_SESSION", format!("no session `{id}`")).with_field("session")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
    }
}

impl From<ntrl::Error> for ApiError {
    fn from(e: ntrl::Error) -> Self {
        use ntrl::Error as E;
        let status = match &e {
            E::EmptyEncounter
            | E::InvalidEncounter(_)
            | E::InvalidParty(_)
            | E::UnknownClass(_)
            | E::InvalidConfig(_)
            | E::SchemaViolation { .. }
            | E::DanglingReference { .. }
            | E::UnsupportedLevel(_)
            | E::ShapeMismatch(_) => StatusCode::BAD_REQUEST,
            E::MissingFile { .. } => StatusCode::NOT_FOUND,
            E::VersionMismatch(_) | E::CorruptCheckpoint(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let code = match &e {
            E::EmptyEncounter => "INVALID_ENCOUNTER",
            other => other.code(),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
