use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::InferenceError;
use crate::ace::{run_battery, AceOptions, Battery, Method};
use crate::data::Arm;
use crate::frame::AnalysisFrame;
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapOptions {
    pub replicates: usize,
    pub alpha: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions { replicates: 1000, alpha: 0.05 }
    }
}

/// Percentile bootstrap summary for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub method: Method,
    pub point: f64,
    /// Differences from successful resamples, in replicate order.
    pub replicates: Vec<f64>,
    pub ci: (f64, f64),
    /// Standard deviation of the replicates.
    pub se: f64,
    /// Standard deviations of the replicated arm means.
    pub arm_se: [f64; 2],
    pub seed: u64,
    pub b: usize,
    pub alpha: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapRun {
    /// The battery on the original data, with SEs and CIs filled in.
    pub point: Battery,
    pub results: Vec<BootstrapResult>,
    pub failures: usize,
    /// Failure message and count, for audit.
    pub failure_reasons: BTreeMap<String, usize>,
}

/// Percentile interval from order statistics `ceil(alpha B / 2)` and
/// `ceil((1 - alpha / 2) B)` (1-based) of the sorted replicates.
pub fn percentile_ci(sorted: &[f64], alpha: f64) -> (f64, f64) {
    let b = sorted.len();
    assert!(b > 0, "percentile interval of no replicates");
    let rank = |q: f64| ((q * b as f64 - 1e-9).ceil() as usize).clamp(1, b) - 1;
    (sorted[rank(alpha / 2.0)], sorted[rank(1.0 - alpha / 2.0)])
}

/// Indices of a resample drawn with replacement within each arm, so both
/// arm sizes are preserved.
pub fn stratified_resample(frame: &AnalysisFrame, rng: &mut impl Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(frame.rows.len());
    for arm in Arm::BOTH {
        let idx = frame.arm_indices(arm);
        out.extend((0..idx.len()).map(|_| idx[rng.random_range(0..idx.len())]));
    }
    out
}

/// Bootstraps the whole battery: every resample refits chains, adherence
/// models and integrated quantities.
///
/// Replicate `r` uses streams derived from `(seed, 2r)` for resampling and
/// `(seed, 2r + 1)` for the estimators, so the output is fixed by
/// `(seed, B)` regardless of thread count.
pub fn bootstrap_battery(
    frame: &AnalysisFrame,
    methods: &[Method],
    ace: &AceOptions,
    opts: &BootstrapOptions,
    seed: u64,
) -> Result<BootstrapRun, InferenceError> {
    if opts.replicates < 100 {
        return Err(InferenceError::TooFewReplicates(opts.replicates));
    }
    if !(opts.alpha > 0.0 && opts.alpha < 1.0) {
        return Err(InferenceError::InvalidAlpha(opts.alpha));
    }
    let mut point = run_battery(frame, methods, ace, seed).map_err(|e| InferenceError::Estimator(Box::new(e)))?;
    let draws: Vec<Result<Battery, String>> = (0..opts.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let idx = stratified_resample(frame, &mut rng::stream(seed, 2 * r));
            run_battery(&frame.resample(&idx), methods, ace, rng::derive_seed(seed, 2 * r + 1)).map_err(|e| e.to_string())
        })
        .collect();

    let mut failure_reasons = BTreeMap::new();
    let mut ok = Vec::with_capacity(draws.len());
    for d in draws {
        match d {
            Ok(b) => ok.push(b),
            Err(msg) => *failure_reasons.entry(msg).or_insert(0) += 1,
        }
    }
    let failures = opts.replicates - ok.len();
    if failures as f64 > 0.05 * opts.replicates as f64 {
        let reasons = failure_reasons.iter().map(|(m, c)| format!("{m} (x{c})")).collect::<Vec<_>>().join("; ");
        return Err(InferenceError::TooManyFailures { failed: failures, total: opts.replicates, reasons });
    }

    let mut results = Vec::with_capacity(methods.len());
    for (i, est) in point.estimates.iter_mut().enumerate() {
        let reps: Vec<f64> = ok.iter().map(|b| b.estimates[i].diff).collect();
        let arm_se = [0, 1].map(|t| {
            let means: Vec<f64> = ok.iter().map(|b| if t == 0 { b.estimates[i].mean0 } else { b.estimates[i].mean1 }).collect();
            stats::sample_sd(&means)
        });
        let mut sorted = reps.clone();
        sorted.sort_by(f64::total_cmp);
        let ci = percentile_ci(&sorted, opts.alpha);
        let se = stats::sample_sd(&reps);
        est.se = Some(se);
        est.arm_se = Some(arm_se);
        est.ci = Some(ci);
        results.push(BootstrapResult {
            method: est.method,
            point: est.diff,
            replicates: reps,
            ci,
            se,
            arm_se,
            seed,
            b: opts.replicates,
            alpha: opts.alpha,
            failures,
        });
    }
    Ok(BootstrapRun { point, results, failures, failure_reasons })
}

/// Bootstrap of a single estimator.
pub fn bootstrap_ci(
    method: Method,
    frame: &AnalysisFrame,
    ace: &AceOptions,
    opts: &BootstrapOptions,
    seed: u64,
) -> Result<BootstrapResult, InferenceError> {
    let mut run = bootstrap_battery(frame, &[method], ace, opts, seed)?;
    Ok(run.results.remove(0))
}
