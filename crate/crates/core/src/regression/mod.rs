//! Least squares, logistic regression and sequential outcome chains.

mod chain;
mod logistic;
mod ols;

use thiserror::Error;

pub use chain::{fit_outcome_chain, OutcomeChain};
pub use logistic::{fit_logistic, sigmoid, LogisticModel, LogisticOptions};
pub use ols::{fit_ols, least_squares, LinearModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("design is rank deficient: column `{column}` is a linear combination of earlier columns")]
    RankDeficient { column: String },
    #[error("{stage}: {rows} usable rows, at least {required} required")]
    InsufficientRows { stage: String, rows: usize, required: usize },
    #[error("response length {response} does not match design rows {rows}")]
    DimensionMismatch { rows: usize, response: usize },
    #[error("response has a single class; logistic regression needs both outcomes")]
    SingleClass,
    #[error("design contains missing or non-finite values")]
    NonFinite,
}
