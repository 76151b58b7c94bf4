//! Core of the SNBI ("Searching NearBy Information") barrier notification
//! service.
//!
//! * [`geo`]: spherical geometry and a grid spatial index.
//! * [`store`]: the content table and the trace log.
//! * [`bayes`]: discrete Bayesian network with Laplace-smoothed learning,
//!   exact inference by variable elimination and k-fold cross validation.
//! * [`selector`]: the notification pipeline (time window, proximity,
//!   direction filter, reaction prediction, neglect suppression).
//! * [`sim`]: walker replay, synthetic dataset generation and evaluation
//!   reports.

pub mod bayes;
pub mod geo;
pub mod selector;
pub mod sim;
pub mod store;
pub mod vocab;
