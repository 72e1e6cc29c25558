//! Intercurrent-event indicators, disposition classification and
//! cumulative incidence of the first ICE.

mod classify;
mod incidence;
mod outcome;

use thiserror::Error;

pub use classify::{classify_disposition, reclassify_dataset, CauseSet, Classification, ReclassifyOptions};
pub use incidence::{cumulative_incidence, loe_timing_histogram, CifCurve, CifPoint, LoeHistogram};
pub use outcome::{derive_ice_outcome, IceCause, IceOutcome};

#[derive(Debug, Error, PartialEq)]
pub enum IceError {
    #[error("subject `{0}` completed treatment; there is no discontinuation to classify")]
    Completer(String),
    #[error("histogram interval must be positive, got {0}")]
    InvalidInterval(f64),
    #[error("unknown efficacy covariate `{0}`")]
    UnknownCovariate(String),
}
