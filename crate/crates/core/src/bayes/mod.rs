//! Discrete Bayesian network: structure, smoothed parameter learning, exact
//! inference by variable elimination, and cross validation of reaction
//! prediction.

mod candidates;
mod cv;
mod factor;
mod infer;
mod learn;
mod net;

pub use candidates::{predict_reaction, rank_candidates, CandidateMap, RankedReaction, DEFAULT_CANDIDATES};
pub(crate) use candidates::predict_from_evidence;
pub use cv::{fold_assignment, k_fold_cv, random_baseline, CvConfig, CvReport, FoldResult, Outcome};
pub use learn::{
    learn_from_records, learn_parameters, load_dataset, read_dataset, save_dataset, write_dataset,
    ReactionRecord, DATASET_COLUMNS,
};
pub use net::{Assignment, BayesNet, Cpt, Structure, Variable, DEFAULT_STRUCTURE, ROW_SUM_TOLERANCE};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BayesError {
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("{state:?} is not a state of {variable}")]
    UnknownState { variable: String, state: String },
    #[error("assignment is incomplete: {0}")]
    IncompleteAssignment(String),
    #[error("evidence has probability zero under the network")]
    ZeroEvidence,
    #[error("query variable {0:?} is also observed")]
    QueryInEvidence(String),
    #[error("network structure contains a cycle")]
    Cyclic,
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("invalid cpt for {variable}: {message}")]
    InvalidCpt { variable: String, message: String },
    #[error("smoothing count must be finite and non-negative, got {0}")]
    InvalidAlpha(f64),
    #[error("no candidate reactions for barrier {0:?}")]
    UnknownBarrier(String),
    #[error("invalid candidate map: {0}")]
    InvalidCandidates(String),
    #[error("k must be at least 2, got {0}")]
    InvalidK(usize),
    #[error("{records} records cannot be split into {k} folds")]
    TooFewRecords { records: usize, k: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },
    #[error("{0}")]
    Io(String),
}
