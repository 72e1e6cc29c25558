use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::RegressionError;

/// Fitted linear mean model with Gaussian residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    /// Regressor names, excluding the intercept.
    pub names: Vec<String>,
    /// Intercept followed by one slope per regressor.
    pub coefficients: Vec<f64>,
    /// `sqrt(RSS / (n - p))`.
    pub residual_sd: f64,
    pub n_obs: usize,
}

impl LinearModel {
    pub fn intercept(&self) -> f64 {
        self.coefficients[0]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.coefficients[1..]
    }

    pub fn predict(&self, regressors: &[f64]) -> f64 {
        self.predict_concat(regressors, &[])
    }

    /// Prediction for the regressor vector `head ++ tail`.
    pub fn predict_concat(&self, head: &[f64], tail: &[f64]) -> f64 {
        let slopes = self.slopes();
        debug_assert_eq!(slopes.len(), head.len() + tail.len());
        let (sh, st) = slopes.split_at(head.len());
        self.coefficients[0]
            + sh.iter().zip(head).map(|(b, v)| b * v).sum::<f64>()
            + st.iter().zip(tail).map(|(b, v)| b * v).sum::<f64>()
    }
}

/// Least-squares solution of `design * beta ~ response` by Householder QR.
///
/// A column whose component orthogonal to the earlier columns is negligible
/// relative to its own norm is reported as rank deficient.
pub fn least_squares(
    design: &DMatrix<f64>,
    response: &DVector<f64>,
    column_names: &[String],
) -> Result<DVector<f64>, RegressionError> {
    let (n, p) = design.shape();
    if response.len() != n {
        return Err(RegressionError::DimensionMismatch { rows: n, response: response.len() });
    }
    if n < p {
        return Err(RegressionError::InsufficientRows { stage: "least squares".into(), rows: n, required: p });
    }
    if design.iter().chain(response.iter()).any(|v| !v.is_finite()) {
        return Err(RegressionError::NonFinite);
    }
    let qr = design.clone().qr();
    let r = qr.r();
    for j in 0..p {
        let col_norm = design.column(j).norm();
        if col_norm == 0.0 || r[(j, j)].abs() <= 1e-9 * col_norm {
            let column = column_names.get(j).cloned().unwrap_or_else(|| format!("#{j}"));
            return Err(RegressionError::RankDeficient { column });
        }
    }
    let qtb = qr.q().transpose() * response;
    Ok(r.solve_upper_triangular(&qtb).expect("nonzero diagonal checked above"))
}

/// Ordinary least squares with an intercept.
///
/// `regressors` is `n x k` without the intercept column; the fit needs at
/// least `k + 2` rows so the residual SD has a positive denominator.
pub fn fit_ols(
    regressors: &DMatrix<f64>,
    response: &[f64],
    names: &[String],
) -> Result<LinearModel, RegressionError> {
    let (n, k) = regressors.shape();
    let p = k + 1;
    if response.len() != n {
        return Err(RegressionError::DimensionMismatch { rows: n, response: response.len() });
    }
    if n < p + 1 {
        return Err(RegressionError::InsufficientRows { stage: "ols".into(), rows: n, required: p + 1 });
    }
    let design = with_intercept(regressors);
    let y = DVector::from_column_slice(response);
    let mut column_names = vec!["(intercept)".to_string()];
    column_names.extend(names.iter().cloned());
    let beta = least_squares(&design, &y, &column_names)?;
    let residuals = &y - &design * &beta;
    let rss = residuals.norm_squared();
    Ok(LinearModel {
        names: names.to_vec(),
        coefficients: beta.iter().copied().collect(),
        residual_sd: (rss / (n - p) as f64).sqrt(),
        n_obs: n,
    })
}

pub(crate) fn with_intercept(regressors: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = regressors.shape();
    DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { regressors[(i, j - 1)] })
}
