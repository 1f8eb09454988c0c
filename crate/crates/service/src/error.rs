use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use lifegrid::descriptor::DescriptorError;
use lifegrid::dsl::ParseError;
use lifegrid::engine::EngineError;
use lifegrid::query::QueryError;
use lifegrid::simsearch::SimSearchError;
use lifegrid::task::TaskError;
use serde::Serialize;
use serde_json::{json, Value};

/// Every failed request answers with this body.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
    pub detail: Value,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code, message: message.into(), detail: Value::Null } }
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.body.detail = detail;
        self
    }

    pub fn with_code(mut self, code: &'static str) -> Self {
        self.body.code = code;
        self
    }

    pub fn with_status(mut self, status: StatusCode) -> Self {
        self.status = status;
        self
    }

    pub fn not_found(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, code, message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        let detail = json!({
            "offset": e.offset,
            "line": e.line,
            "column": e.column,
            "expected": e.expected,
        });
        ApiError::new(StatusCode::BAD_REQUEST, "parse_error", e.to_string()).with_detail(detail)
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        match &e {
            QueryError::UnknownConcept(c) => {
                ApiError::new(StatusCode::BAD_REQUEST, "unknown_concept", e.to_string()).with_detail(json!({ "concept": c }))
            }
            QueryError::InvalidQuery(_) => ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", e.to_string()),
        }
    }
}

impl From<DescriptorError> for ApiError {
    fn from(e: DescriptorError) -> Self {
        let code = match e {
            DescriptorError::EmptyMask | DescriptorError::AllBlank => "empty_mask",
            DescriptorError::BadPaletteIndex(_) => "bad_palette_index",
            DescriptorError::UnknownConcept(_) => "unknown_concept",
            _ => "descriptor_error",
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
    }
}

impl From<SimSearchError> for ApiError {
    fn from(e: SimSearchError) -> Self {
        match e {
            SimSearchError::UnknownSegment(id) => {
                ApiError::not_found("unknown_segment", e.to_string()).with_detail(json!({ "segment_id": id }))
            }
            SimSearchError::MetricUnavailable(_) => ApiError::new(StatusCode::BAD_REQUEST, "metric_unavailable", e.to_string()),
            SimSearchError::Descriptor(d) => d.into(),
            SimSearchError::ZeroK | SimSearchError::DimensionMismatch(..) => ApiError::bad_request(e.to_string()),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Parse(p) => p.into(),
            EngineError::Query(q) => q.into(),
            EngineError::SimSearch(s) => s.into(),
            EngineError::Descriptor(d) => d.into(),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        }
    }
}

impl From<TaskError> for ApiError {
    fn from(e: TaskError) -> Self {
        let (status, code) = match e {
            TaskError::UnknownTask(_) => (StatusCode::NOT_FOUND, "unknown_task"),
            TaskError::UnknownSession(_) => (StatusCode::CONFLICT, "unknown_session"),
            TaskError::SessionExpired(_) => (StatusCode::CONFLICT, "session_expired"),
            TaskError::AlreadySolved(_) => (StatusCode::CONFLICT, "already_solved"),
            TaskError::InvalidTask { .. } | TaskError::Read(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(e.status(), "bad_request", e.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(e: QueryRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(e: PathRejection) -> Self {
        ApiError::bad_request(e.body_text())
    }
}
