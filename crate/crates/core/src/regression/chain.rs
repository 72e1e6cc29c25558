use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{fit_ols, LinearModel, RegressionError};
use crate::data::{Arm, TrialDataset};
use crate::frame::{AnalysisFrame, FrameRow};

/// Sequential regressions for one arm: `Z_1 | X`, `Z_2 | X, Z_1`, ...,
/// and `Y | X, Z_1..Z_K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeChain {
    pub arm: Arm,
    pub z_models: Vec<LinearModel>,
    /// Fitted on the arm's adherers only.
    pub y_model: LinearModel,
}

pub fn fit_outcome_chain(ds: &TrialDataset, arm: Arm) -> Result<OutcomeChain, RegressionError> {
    OutcomeChain::fit(&AnalysisFrame::from_dataset(ds), arm)
}

fn stage_fit(
    rows: &[&FrameRow],
    n_z: usize,
    response: impl Fn(&FrameRow) -> f64,
    names: &[String],
    stage: String,
) -> Result<LinearModel, RegressionError> {
    let k = names.len();
    if rows.len() < k + 2 {
        return Err(RegressionError::InsufficientRows { stage, rows: rows.len(), required: k + 2 });
    }
    let n_x = k - n_z;
    let design = DMatrix::from_fn(rows.len(), k, |i, j| {
        if j < n_x {
            rows[i].x[j]
        } else {
            rows[i].z[j - n_x].expect("rows filtered on observed intermediates")
        }
    });
    let y: Vec<f64> = rows.iter().map(|r| response(r)).collect();
    fit_ols(&design, &y, names).map_err(|e| match e {
        RegressionError::InsufficientRows { rows, required, .. } => {
            RegressionError::InsufficientRows { stage, rows, required }
        }
        other => other,
    })
}

impl OutcomeChain {
    /// Fits the chain on arm `arm`. The model for visit `k` uses subjects
    /// with `Z_1..Z_k` observed; the outcome model uses adherers with every
    /// intermediate value and `Y` observed.
    pub fn fit(frame: &AnalysisFrame, arm: Arm) -> Result<Self, RegressionError> {
        let n_visits = frame.n_visits();
        let mut names = frame.regressor_names.clone();
        let mut z_models = Vec::with_capacity(n_visits);
        for k in 0..n_visits {
            let rows: Vec<&FrameRow> = frame
                .arm_rows(arm)
                .filter(|r| r.z[..=k].iter().all(Option::is_some))
                .collect();
            let model = stage_fit(
                &rows,
                k,
                |r| r.z[k].expect("filtered"),
                &names,
                format!("arm {} model for {}", arm, frame.visit_labels[k]),
            )?;
            z_models.push(model);
            names.push(format!("z_{}", frame.visit_labels[k]));
        }
        let rows: Vec<&FrameRow> = frame
            .arm_rows(arm)
            .filter(|r| r.adherent && r.y.is_some() && r.z.iter().all(Option::is_some))
            .collect();
        let y_model = stage_fit(
            &rows,
            n_visits,
            |r| r.y.expect("filtered"),
            &names,
            format!("arm {arm} outcome model"),
        )?;
        Ok(OutcomeChain { arm, z_models, y_model })
    }

    pub fn n_visits(&self) -> usize {
        self.z_models.len()
    }

    /// `E[Z_k | X = x, Z_<k = z_prefix]` with `z_prefix.len() == k`.
    pub fn predict_z(&self, k: usize, x: &[f64], z_prefix: &[f64]) -> f64 {
        self.z_models[k].predict_concat(x, &z_prefix[..k])
    }

    /// `E[Y | X = x, Z = z]`.
    pub fn predict_y(&self, x: &[f64], z: &[f64]) -> f64 {
        self.y_model.predict_concat(x, z)
    }

    /// Chained conditional means `E[Z_k | X = x]` for every visit.
    pub fn expected_z(&self, x: &[f64]) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.n_visits());
        for k in 0..self.n_visits() {
            let next = self.predict_z(k, x, &z);
            z.push(next);
        }
        z
    }

    /// `phi_t(x) = E[Y(t) | X = x]`: the outcome model evaluated with every
    /// intermediate replaced by its chained prediction. Exact for linear
    /// chains because conditional means compose.
    pub fn compose_phi(&self, x: &[f64]) -> f64 {
        self.predict_y(x, &self.expected_z(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::FrameRow;
    use approx::assert_abs_diff_eq;

    fn frame(rows: Vec<FrameRow>, visits: &[&str]) -> AnalysisFrame {
        let mut boundaries = vec![0.0];
        boundaries.extend((1..=visits.len()).map(|i| i as f64 * 10.0));
        boundaries.push(52.0);
        AnalysisFrame {
            regressor_names: vec!["x".into()],
            visit_labels: visits.iter().map(|s| s.to_string()).collect(),
            boundaries,
            rows,
        }
    }

    fn row(arm: Arm, x: f64, z: f64, y: f64) -> FrameRow {
        FrameRow { arm, x: vec![x], z: vec![Some(z)], y: Some(y), first_ice: None, adherent: true }
    }

    #[test]
    fn collinear_intermediate_is_rank_deficient() {
        // Z = 1 + 2X exactly makes [1, X, Z] singular for the outcome model.
        let rows = (0..12)
            .map(|i| {
                let x = i as f64 * 0.5;
                let z = 1.0 + 2.0 * x;
                row(Arm::Reference, x, z, 3.0 + z)
            })
            .collect();
        let err = OutcomeChain::fit(&frame(rows, &["v1"]), Arm::Reference).unwrap_err();
        assert_eq!(err, RegressionError::RankDeficient { column: "z_v1".into() });
    }

    #[test]
    fn exact_linear_system() {
        // Z = 1 + 2X + e with e independent of X, Y = 3 + Z exactly.
        let noise = [0.3, -0.2, 0.5, -0.4, 0.1, 0.0, -0.1, 0.2, -0.3, 0.4, -0.5, 0.25];
        let rows = (0..12)
            .map(|i| {
                let x = i as f64 * 0.5;
                let z = 1.0 + 2.0 * x + noise[i];
                row(Arm::Experimental, x, z, 3.0 + z)
            })
            .collect();
        let f = frame(rows, &["v1"]);
        let chain = OutcomeChain::fit(&f, Arm::Experimental).unwrap();
        let y = &chain.y_model.coefficients;
        assert_abs_diff_eq!(y[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(y[1], 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(y[2], 1.0, epsilon = 1e-10);
        // Fitted Z model is exact up to the OLS fit of the noise.
        let zm = &chain.z_models[0];
        assert_abs_diff_eq!(chain.compose_phi(&[0.0]), 3.0 + zm.intercept(), epsilon = 1e-10);
    }

    #[test]
    fn insufficient_adherers() {
        let mut rows: Vec<FrameRow> = (0..10).map(|i| row(Arm::Reference, i as f64, (i * i) as f64, 1.0 + i as f64)).collect();
        for r in rows.iter_mut().skip(3) {
            r.adherent = false;
            r.y = None;
        }
        let err = OutcomeChain::fit(&frame(rows, &["v1"]), Arm::Reference).unwrap_err();
        assert!(matches!(err, RegressionError::InsufficientRows { rows: 3, required: 4, .. }), "{err}");
    }
}
