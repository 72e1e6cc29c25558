//! Regression-ready view of a [`TrialDataset`].

use crate::data::{Arm, TrialDataset};
use crate::ice::derive_ice_outcome;

/// One subject with baseline covariates expanded to regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub arm: Arm,
    pub x: Vec<f64>,
    pub z: Vec<Option<f64>>,
    pub y: Option<f64>,
    /// First ICE time if one occurred by `d_max`.
    pub first_ice: Option<f64>,
    pub adherent: bool,
}

impl FrameRow {
    /// Leading run of observed intermediate values.
    pub fn observed_z_prefix(&self) -> Vec<f64> {
        self.z.iter().map_while(|z| *z).collect()
    }
}

/// Subjects of a trial in analysis form. Bootstrap resamples are frames
/// too, so estimators never need unique subject ids.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisFrame {
    pub regressor_names: Vec<String>,
    pub visit_labels: Vec<String>,
    /// `0, visit weeks..., d_max`.
    pub boundaries: Vec<f64>,
    pub rows: Vec<FrameRow>,
}

impl AnalysisFrame {
    pub fn from_dataset(ds: &TrialDataset) -> Self {
        let schema = ds.schema();
        let d_max = ds.d_max();
        let rows = ds
            .subjects()
            .iter()
            .map(|s| {
                let o = derive_ice_outcome(s, d_max);
                FrameRow {
                    arm: s.arm,
                    x: schema.expand(&s.x),
                    z: s.z.clone(),
                    y: s.y,
                    first_ice: o.first_ice_time,
                    adherent: o.adherent,
                }
            })
            .collect();
        AnalysisFrame {
            regressor_names: schema.regressor_names(),
            visit_labels: schema.visits().iter().map(|v| v.label.clone()).collect(),
            boundaries: schema.interval_boundaries(),
            rows,
        }
    }

    pub fn n_visits(&self) -> usize {
        self.visit_labels.len()
    }

    pub fn n_regressors(&self) -> usize {
        self.regressor_names.len()
    }

    pub fn d_max(&self) -> f64 {
        *self.boundaries.last().expect("boundaries include d_max")
    }

    pub fn arm_rows(&self, arm: Arm) -> impl Iterator<Item = &FrameRow> {
        self.rows.iter().filter(move |r| r.arm == arm)
    }

    pub fn arm_indices(&self, arm: Arm) -> Vec<usize> {
        self.rows.iter().enumerate().filter(|(_, r)| r.arm == arm).map(|(i, _)| i).collect()
    }

    pub fn arm_size(&self, arm: Arm) -> usize {
        self.arm_rows(arm).count()
    }

    pub fn adherer_count(&self, arm: Arm) -> usize {
        self.arm_rows(arm).filter(|r| r.adherent).count()
    }

    /// Frame made of the given rows (repeats allowed).
    pub fn resample(&self, indices: &[usize]) -> AnalysisFrame {
        AnalysisFrame {
            regressor_names: self.regressor_names.clone(),
            visit_labels: self.visit_labels.clone(),
            boundaries: self.boundaries.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Copy with every observed final outcome mapped through `f`.
    pub fn map_outcomes(&self, f: impl Fn(f64) -> f64) -> AnalysisFrame {
        let mut out = self.clone();
        for r in &mut out.rows {
            r.y = r.y.map(&f);
        }
        out
    }
}
