use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use partscale_api::ErrorBody;

/// An error response: status plus `{code, message, offset?, field?}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, body: ErrorBody) -> ApiError {
        ApiError { status, body }
    }

    pub fn not_found(id: &str) -> ApiError {
        ApiError::new(StatusCode::NOT_FOUND, ErrorBody::new("not_found", format!("no object `{id}`")))
    }

    pub fn conflict(expected: usize, actual: usize) -> ApiError {
        ApiError::new(
            StatusCode::CONFLICT,
            ErrorBody::new(
                "conflict",
                format!("object is at version {actual}, request expected {expected}"),
            ),
        )
    }

    pub fn bad_request(body: ErrorBody) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, body)
    }

    pub fn unprocessable(body: ErrorBody) -> ApiError {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, body)
    }

    pub fn internal(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorBody::new("internal", message))
    }

    pub fn io(e: std::io::Error) -> ApiError {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, ErrorBody::new("io", e.to_string()))
    }
}

impl From<partscale::Error> for ApiError {
    fn from(e: partscale::Error) -> ApiError {
        use partscale::Error as E;
        let status = match &e {
            E::Format { .. } | E::Image(_) => StatusCode::BAD_REQUEST,
            E::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.into())
    }
}

/// Request-body errors, including unparseable JSON.
impl From<ErrorBody> for ApiError {
    fn from(body: ErrorBody) -> ApiError {
        ApiError::unprocessable(body)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
