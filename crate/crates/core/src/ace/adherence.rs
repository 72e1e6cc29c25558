use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::AceError;
use crate::data::{Arm, TrialDataset};
use crate::frame::{AnalysisFrame, FrameRow};
use crate::regression::{fit_logistic, LogisticModel, LogisticOptions};

/// Probability of staying ICE-free through one inter-visit interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IntervalModel {
    Logistic { model: LogisticModel },
    /// Used when every at-risk subject had the same outcome.
    Constant { probability: f64 },
}

impl IntervalModel {
    /// `P(no ICE in the interval | at risk, x, z_prefix)`.
    pub fn probability(&self, x: &[f64], z_prefix: &[f64]) -> f64 {
        match self {
            IntervalModel::Logistic { model } => model.probability_concat(x, z_prefix),
            IntervalModel::Constant { probability } => *probability,
        }
    }
}

/// Interval-product adherence model for one arm.
///
/// Interval `k` runs over `(b_k, b_{k+1}]` with boundaries `0`, the visit
/// weeks and `d_max`. Its model conditions on `x` and the intermediate values
/// measured at the first `k` visits. The overall adherence probability is
/// the product over intervals; it identifies the principal score under
/// ignorable adherence given baseline and intermediate data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdherenceModel {
    pub arm: Arm,
    pub boundaries: Vec<f64>,
    pub intervals: Vec<IntervalModel>,
}

impl AdherenceModel {
    pub fn n_intervals(&self) -> usize {
        self.intervals.len()
    }

    /// Product of the interval probabilities; `z` holds every intermediate
    /// value (only the relevant prefix is used per interval).
    pub fn probability(&self, x: &[f64], z: &[f64]) -> f64 {
        self.intervals.iter().enumerate().map(|(k, m)| m.probability(x, &z[..k])).product()
    }
}

pub fn fit_adherence_model(ds: &TrialDataset, arm: Arm, opts: &LogisticOptions) -> Result<AdherenceModel, AceError> {
    AdherenceModel::fit(&AnalysisFrame::from_dataset(ds), arm, opts)
}

impl AdherenceModel {
    pub fn fit(frame: &AnalysisFrame, arm: Arm, opts: &LogisticOptions) -> Result<Self, AceError> {
        let b = &frame.boundaries;
        let n_x = frame.n_regressors();
        let mut names = frame.regressor_names.clone();
        let mut intervals = Vec::with_capacity(b.len() - 1);
        for k in 0..b.len() - 1 {
            let (start, end) = (b[k], b[k + 1]);
            let at_risk: Vec<&FrameRow> = frame
                .arm_rows(arm)
                .filter(|r| r.first_ice.is_none_or(|t| t > start))
                .filter(|r| r.z[..k].iter().all(Option::is_some))
                .collect();
            if at_risk.is_empty() {
                return Err(AceError::NoAtRisk { arm, interval: k });
            }
            let stays: Vec<bool> = at_risk.iter().map(|r| r.first_ice.is_none_or(|t| t > end)).collect();
            let kept = stays.iter().filter(|&&s| s).count();
            let model = if kept == 0 || kept == stays.len() {
                IntervalModel::Constant { probability: kept as f64 / stays.len() as f64 }
            } else {
                let design = DMatrix::from_fn(at_risk.len(), n_x + k, |i, j| {
                    if j < n_x {
                        at_risk[i].x[j]
                    } else {
                        at_risk[i].z[j - n_x].expect("filtered on observed prefix")
                    }
                });
                let model = fit_logistic(&design, &stays, &names, opts).map_err(|source| AceError::Fit {
                    context: format!("arm {arm} adherence model for interval ({start}, {end}]"),
                    source,
                })?;
                IntervalModel::Logistic { model }
            };
            intervals.push(model);
            if k < frame.n_visits() {
                names.push(format!("z_{}", frame.visit_labels[k]));
            }
        }
        Ok(AdherenceModel { arm, boundaries: b.clone(), intervals })
    }
}
