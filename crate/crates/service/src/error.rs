use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lkg_core::graph::GraphError;
use lkg_core::search::SearchError;
use serde::Serialize;

/// JSON error body. `code` is one of `not_found`, `invalid_request`, `index_missing`,
/// `internal`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn not_found(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "invalid_request",
            message: message.into(),
        }
    }

    pub fn unavailable(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::SERVICE_UNAVAILABLE,
            code: "index_missing",
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        #[derive(Serialize)]
        struct Body<'a> {
            status: u16,
            code: &'a str,
            message: &'a str,
        }
        let body = Body {
            status: self.status.as_u16(),
            code: self.code,
            message: &self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        match e {
            SearchError::InvalidQuery(_) | SearchError::NotAFact(_) => Self::invalid(e.to_string()),
            SearchError::UnknownNode(_) => Self::not_found(e.to_string()),
            SearchError::EmptyIndex => Self::unavailable(e.to_string()),
            SearchError::Index(_) | SearchError::Graph(_) => Self::internal(e.to_string()),
        }
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::UnknownNode(_) => Self::not_found(e.to_string()),
            GraphError::WrongLabel { .. } => Self::invalid(e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}
