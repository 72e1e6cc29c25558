use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RubinPool {
    pub point: f64,
    /// Mean within-imputation variance.
    pub within: f64,
    /// Sample variance of the estimates.
    pub between: f64,
    /// `within + (1 + 1/m) * between`.
    pub total: f64,
    pub se: f64,
    pub m: usize,
}

pub fn rubin_pool(estimates: &[f64], within_variances: &[f64]) -> Result<RubinPool, InferenceError> {
    let m = estimates.len();
    if m != within_variances.len() {
        return Err(InferenceError::LengthMismatch { estimates: m, variances: within_variances.len() });
    }
    if m < 2 {
        return Err(InferenceError::TooFewImputations(m));
    }
    let within = stats::mean(within_variances);
    let between = stats::sample_variance(estimates);
    let total = within + (1.0 + 1.0 / m as f64) * between;
    Ok(RubinPool { point: stats::mean(estimates), within, between, total, se: total.sqrt(), m })
}
