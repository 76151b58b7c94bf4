use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use snbi_core::bayes::BayesError;
use snbi_core::selector::{EngineError, SelectError};
use snbi_core::store::StoreError;

/// Every machine code the API can return.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    BadRequest,
    InvalidState,
    Validation,
    UnknownUser,
    OutOfOrderFix,
    RadiusTooLarge,
    MalformedDataset,
    NoDataset,
    InvalidK,
    NotFound,
    Internal,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 11] = [
        ErrorCode::BadRequest,
        ErrorCode::InvalidState,
        ErrorCode::Validation,
        ErrorCode::UnknownUser,
        ErrorCode::OutOfOrderFix,
        ErrorCode::RadiusTooLarge,
        ErrorCode::MalformedDataset,
        ErrorCode::NoDataset,
        ErrorCode::InvalidK,
        ErrorCode::NotFound,
        ErrorCode::Internal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::BadRequest => "bad_request",
            ErrorCode::InvalidState => "invalid_state",
            ErrorCode::Validation => "validation",
            ErrorCode::UnknownUser => "unknown_user",
            ErrorCode::OutOfOrderFix => "out_of_order_fix",
            ErrorCode::RadiusTooLarge => "radius_too_large",
            ErrorCode::MalformedDataset => "malformed_dataset",
            ErrorCode::NoDataset => "no_dataset",
            ErrorCode::InvalidK => "invalid_k",
            ErrorCode::NotFound => "not_found",
            ErrorCode::Internal => "internal",
        }
    }

    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::BadRequest
            | ErrorCode::InvalidState
            | ErrorCode::Validation
            | ErrorCode::RadiusTooLarge
            | ErrorCode::MalformedDataset
            | ErrorCode::NoDataset
            | ErrorCode::InvalidK => StatusCode::BAD_REQUEST,
            ErrorCode::UnknownUser | ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::OutOfOrderFix => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub status: u16,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            status: code.status().as_u16(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let code = match &e {
            StoreError::Validation(_) | StoreError::DuplicateId(_) => ErrorCode::Validation,
            StoreError::OutOfOrderFix { .. } => ErrorCode::OutOfOrderFix,
            StoreError::CorruptFile { .. } | StoreError::Io { .. } => ErrorCode::Internal,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<SelectError> for ApiError {
    fn from(e: SelectError) -> Self {
        let code = match &e {
            SelectError::InvalidState { .. } => ErrorCode::InvalidState,
            _ => ErrorCode::Internal,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Store(e) => e.into(),
            EngineError::Select(e) => e.into(),
        }
    }
}

impl From<BayesError> for ApiError {
    fn from(e: BayesError) -> Self {
        let code = match &e {
            BayesError::InvalidK(_) | BayesError::TooFewRecords { .. } => ErrorCode::InvalidK,
            BayesError::Dataset { .. } | BayesError::Io(_) => ErrorCode::MalformedDataset,
            BayesError::UnknownBarrier(_) | BayesError::UnknownState { .. } => {
                ErrorCode::MalformedDataset
            }
            _ => ErrorCode::Internal,
        };
        ApiError::new(code, e.to_string())
    }
}
