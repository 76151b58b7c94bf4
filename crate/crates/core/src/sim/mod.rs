//! Walker replay, the synthetic reaction-dataset generator and the
//! evaluation report.

mod replay;
mod report;
mod route;
mod truth;

pub use replay::{replay, Event, EventLog, InProcess, Pipeline, ReplaySummary};
pub use report::{eval_report, BarrierAccuracy, EvalReport, TruthInfo};
pub use route::{Route, DEFAULT_POLL_INTERVAL, DEFAULT_SPEED};
pub use truth::{
    example_records, gen_dataset, random_net, sample_assignment, GroundTruthSpec, DEFAULT_SHARPNESS,
    EXAMPLE_ROWS, MAX_NOISE,
};

use thiserror::Error;

use crate::bayes::BayesError;
use crate::selector::EngineError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid route: {0}")]
    InvalidRoute(String),
    #[error("invalid ground truth: {0}")]
    InvalidSpec(String),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("service unreachable: {0}")]
    ServiceUnreachable(String),
    #[error("service error {status} {code}: {message}")]
    Service {
        status: u16,
        code: String,
        message: String,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Bayes(#[from] BayesError),
}
