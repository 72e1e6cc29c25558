//! Stratified bootstrap intervals and Rubin's rules.

mod bootstrap;
mod rubin;

use thiserror::Error;

use crate::ace::AceError;

pub use bootstrap::{
    bootstrap_battery, bootstrap_ci, percentile_ci, stratified_resample, BootstrapOptions, BootstrapResult,
    BootstrapRun,
};
pub use rubin::{rubin_pool, RubinPool};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("Rubin's rules need at least 2 imputations, got {0}")]
    TooFewImputations(usize),
    #[error("{estimates} estimates but {variances} within-imputation variances")]
    LengthMismatch { estimates: usize, variances: usize },
    #[error("bootstrap needs at least 100 replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("estimator failed on the original data: {0}")]
    Estimator(Box<AceError>),
    #[error("estimators failed on {failed} of {total} resamples (limit 5%): {reasons}")]
    TooManyFailures { failed: usize, total: usize, reasons: String },
}
