use serde::{Deserialize, Serialize};

use super::IceError;
use crate::data::{
    CovariateValue, DispositionEvidence, DispositionReason, EventTime, SubjectRecord, TrialDataset,
};

/// Set of ICE causes assigned to one discontinuation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CauseSet {
    pub ae: bool,
    pub loe: bool,
    pub admin: bool,
}

impl CauseSet {
    pub fn is_empty(&self) -> bool {
        !(self.ae || self.loe || self.admin)
    }

    /// `AE`, `LoE`, `AE+LoE` or `Admin`.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.ae {
            parts.push("AE");
        }
        if self.loe {
            parts.push("LoE");
        }
        if self.admin {
            parts.push("Admin");
        }
        parts.join("+")
    }
}

/// Assigns ICE causes to a discontinuation from coded evidence.
///
/// * AE if the recorded reason is AE or any safety issue was flagged.
/// * LoE if the no-improvement flag is set, or the efficacy change
///   `eff_at_dc - baseline_eff` exceeds `-improvement_threshold` (lower
///   values are better).
/// * Admin only when neither AE nor LoE qualifies.
pub fn classify_disposition(
    ev: &DispositionEvidence,
    baseline_eff: f64,
    eff_at_dc: f64,
    improvement_threshold: f64,
) -> Result<CauseSet, IceError> {
    if ev.is_completer() {
        return Err(IceError::Completer(String::new()));
    }
    let ae = ev.recorded_reason == DispositionReason::Ae || ev.ae_flag;
    let loe = ev.efficacy_no_improvement_flag || (eff_at_dc - baseline_eff) > -improvement_threshold;
    Ok(CauseSet { ae, loe, admin: !(ae || loe) })
}

/// Options for [`reclassify_dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReclassifyOptions {
    pub improvement_threshold: f64,
    /// Baseline covariate holding the efficacy measure. Without it only the
    /// coded flags are used.
    pub efficacy_covariate: Option<String>,
}

impl Default for ReclassifyOptions {
    fn default() -> Self {
        ReclassifyOptions { improvement_threshold: 0.0, efficacy_covariate: None }
    }
}

/// Classification of one discontinued subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub id: String,
    pub recorded_reason: DispositionReason,
    pub discontinuation_week: f64,
    pub causes: CauseSet,
}

/// Re-derives the per-cause event times of every discontinued subject from
/// its disposition evidence.
///
/// The discontinuation time is the earliest recorded event time; it is moved
/// onto the classified causes and removed from the others. The efficacy value
/// at discontinuation is the last intermediate value observed before it (the
/// baseline value when none was observed). Completers and subjects without
/// an event time are left untouched.
pub fn reclassify_dataset(
    ds: &TrialDataset,
    opts: &ReclassifyOptions,
) -> Result<(TrialDataset, Vec<Classification>), IceError> {
    let efficacy_index = match &opts.efficacy_covariate {
        Some(name) => Some(
            ds.schema()
                .covariate_index(name)
                .ok_or_else(|| IceError::UnknownCovariate(name.clone()))?,
        ),
        None => None,
    };
    let mut classifications = Vec::new();
    let mut subjects = Vec::with_capacity(ds.len());
    for s in ds.subjects() {
        let first = s.first_event_weeks();
        if s.evidence.is_completer() || !first.is_finite() {
            subjects.push(s.clone());
            continue;
        }
        let (baseline, at_dc) = match efficacy_index.and_then(|i| baseline_value(s, i)) {
            Some(b) => (b, last_observed_before(s, ds, first).unwrap_or(b)),
            // Without an efficacy measure the numeric rule can never fire.
            None => (0.0, f64::NEG_INFINITY),
        };
        let causes = classify_disposition(&s.evidence, baseline, at_dc, opts.improvement_threshold)
            .map_err(|_| IceError::Completer(s.id.clone()))?;
        let at = |on: bool| if on { EventTime::At(first) } else { EventTime::Never };
        subjects.push(SubjectRecord {
            d_ae: at(causes.ae),
            d_loe: at(causes.loe),
            d_admin: at(causes.admin),
            ..s.clone()
        });
        classifications.push(Classification {
            id: s.id.clone(),
            recorded_reason: s.evidence.recorded_reason,
            discontinuation_week: first,
            causes,
        });
    }
    let out = TrialDataset::new(ds.schema().clone(), subjects)
        .expect("reclassification preserves ids and arms");
    Ok((out, classifications))
}

fn baseline_value(s: &SubjectRecord, index: usize) -> Option<f64> {
    match s.x.get(index)? {
        CovariateValue::Continuous(v) => Some(*v),
        CovariateValue::Level(_) => None,
    }
}

fn last_observed_before(s: &SubjectRecord, ds: &TrialDataset, time: f64) -> Option<f64> {
    ds.schema()
        .visits()
        .iter()
        .zip(&s.z)
        .filter(|(v, _)| v.week < time)
        .filter_map(|(_, z)| *z)
        .last()
}
