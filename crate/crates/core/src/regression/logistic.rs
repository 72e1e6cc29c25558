use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ols::{least_squares, with_intercept};
use super::RegressionError;

/// Convergence controls for iteratively reweighted least squares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticOptions {
    /// Stop when the largest coefficient change falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Coefficient norm beyond which the fit is declared (quasi-)separated.
    pub separation_norm: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions { tolerance: 1e-8, max_iterations: 100, separation_norm: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub names: Vec<String>,
    /// Intercept followed by one slope per regressor.
    pub coefficients: Vec<f64>,
    pub converged: bool,
    /// Set when the coefficient norm diverged.
    pub separation: bool,
    pub iterations: usize,
}

/// Logistic function, stable for large `|eta|`.
pub fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

impl LogisticModel {
    pub fn linear_predictor_concat(&self, head: &[f64], tail: &[f64]) -> f64 {
        let slopes = &self.coefficients[1..];
        debug_assert_eq!(slopes.len(), head.len() + tail.len());
        let (sh, st) = slopes.split_at(head.len());
        self.coefficients[0]
            + sh.iter().zip(head).map(|(b, v)| b * v).sum::<f64>()
            + st.iter().zip(tail).map(|(b, v)| b * v).sum::<f64>()
    }

    /// `P(response = 1)` at the regressor vector `head ++ tail`.
    pub fn probability_concat(&self, head: &[f64], tail: &[f64]) -> f64 {
        sigmoid(self.linear_predictor_concat(head, tail))
    }

    pub fn probability(&self, regressors: &[f64]) -> f64 {
        self.probability_concat(regressors, &[])
    }
}

/// Maximum-likelihood logistic regression with an intercept, fitted by
/// iteratively reweighted least squares (Newton steps solved by QR).
///
/// Separation is flagged (`converged = false`, `separation = true`) rather
/// than treated as an error.
pub fn fit_logistic(
    regressors: &DMatrix<f64>,
    response: &[bool],
    names: &[String],
    opts: &LogisticOptions,
) -> Result<LogisticModel, RegressionError> {
    let (n, k) = regressors.shape();
    if response.len() != n {
        return Err(RegressionError::DimensionMismatch { rows: n, response: response.len() });
    }
    let ones = response.iter().filter(|&&r| r).count();
    if ones == 0 || ones == n {
        return Err(RegressionError::SingleClass);
    }
    let design = with_intercept(regressors);
    let mut column_names = vec!["(intercept)".to_string()];
    column_names.extend(names.iter().cloned());

    let y: Vec<f64> = response.iter().map(|&r| if r { 1.0 } else { 0.0 }).collect();
    let mut beta = DVector::zeros(k + 1);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;
    let mut weighted = design.clone();
    let mut rhs = DVector::zeros(n);

    while iterations < opts.max_iterations {
        iterations += 1;
        let eta = &design * &beta;
        for i in 0..n {
            let p = sigmoid(eta[i]);
            let w = (p * (1.0 - p)).max(1e-12);
            let sw = w.sqrt();
            for j in 0..=k {
                weighted[(i, j)] = design[(i, j)] * sw;
            }
            rhs[i] = (y[i] - p) / sw;
        }
        let step = least_squares(&weighted, &rhs, &column_names)?;
        beta += &step;
        if beta.norm() > opts.separation_norm || !beta.iter().all(|b| b.is_finite()) {
            separation = true;
            break;
        }
        if step.amax() < opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged && !separation {
        // Coefficients drifting without bound push fitted probabilities to 0 or 1.
        let eta = &design * &beta;
        separation = eta.amax() > 30.0;
    }

    Ok(LogisticModel {
        names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        converged,
        separation,
        iterations,
    })
}
