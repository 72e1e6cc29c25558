use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::generate_trial;
use super::oracle::{OracleTruth, TruthValue};
use super::spec::SimulationSpec;
use super::SimError;
use crate::ace::{run_battery, AceOptions, Method};
use crate::frame::AnalysisFrame;
use crate::inference::{bootstrap_battery, BootstrapOptions};
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkOptions {
    pub reps: usize,
    /// Subjects per arm.
    pub n_grid: Vec<usize>,
    pub methods: Vec<Method>,
    pub ace: AceOptions,
    /// When set, every replication is bootstrapped and CI coverage reported.
    pub bootstrap: Option<BootstrapOptions>,
}

/// Aggregate performance of one estimator at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub n_per_arm: usize,
    /// Estimator name, or `p_plus_plus`.
    pub estimator: String,
    /// Stratum whose oracle effect the estimator is compared with.
    pub target: String,
    pub truth: f64,
    pub mean_estimate: f64,
    pub bias: f64,
    pub sd: f64,
    /// Monte Carlo standard error of the mean estimate.
    pub mc_se: f64,
    pub coverage: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    /// Per-replication estimates in replication order.
    pub estimates: Vec<f64>,
}

/// Mean absolute difference between the hypothetical-strategy estimate
/// for everyone and the `S++` estimate within each replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub n_per_arm: usize,
    pub mean_abs_gap: f64,
    pub max_abs_gap: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub oracle: OracleTruth,
    pub rows: Vec<BenchmarkRow>,
    pub gaps: Vec<GapRow>,
    /// Failure message and count over all replications.
    pub failures: BTreeMap<String, usize>,
}

impl BenchmarkReport {
    pub fn row(&self, n_per_arm: usize, estimator: &str) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.n_per_arm == n_per_arm && r.estimator == estimator)
    }
}

/// Oracle effect an estimator is compared with. The naive estimator has no
/// causal target and is compared with `S++`.
pub fn target_of(method: Method, oracle: &OracleTruth) -> (&'static str, TruthValue) {
    match method {
        Method::Naive | Method::AcePlusPlus => ("S++", oracle.plus_plus),
        Method::AceStarPlus => ("S*+", oracle.star_plus),
        Method::Mar | Method::J2r => ("S**", oracle.star_star),
    }
}

struct RepOutcome {
    /// Per method: `(diff, ci)`.
    estimates: Vec<(f64, Option<(f64, f64)>)>,
    p_plus_plus: Option<f64>,
}

fn run_rep(spec: &SimulationSpec, opts: &BenchmarkOptions, seed: u64) -> Result<RepOutcome, String> {
    let (ds, _) = generate_trial(spec, rng::derive_seed(seed, 0)).map_err(|e| e.to_string())?;
    let frame = AnalysisFrame::from_dataset(&ds);
    let est_seed = rng::derive_seed(seed, 1);
    let battery = match &opts.bootstrap {
        Some(b) => bootstrap_battery(&frame, &opts.methods, &opts.ace, b, est_seed).map_err(|e| e.to_string())?.point,
        None => run_battery(&frame, &opts.methods, &opts.ace, est_seed).map_err(|e| e.to_string())?,
    };
    Ok(RepOutcome {
        estimates: battery.estimates.iter().map(|e| (e.diff, e.ci)).collect(),
        p_plus_plus: battery.p_plus_plus,
    })
}

fn summarize(
    n: usize,
    estimator: String,
    target: &str,
    truth: f64,
    values: Vec<f64>,
    cis: Option<Vec<(f64, f64)>>,
    failures: usize,
) -> BenchmarkRow {
    let mean = stats::mean(&values);
    let sd = stats::sample_sd(&values);
    let coverage = cis.map(|cis| cis.iter().filter(|(lo, hi)| *lo <= truth && truth <= *hi).count() as f64 / cis.len() as f64);
    BenchmarkRow {
        n_per_arm: n,
        estimator,
        target: target.to_string(),
        truth,
        mean_estimate: mean,
        bias: mean - truth,
        sd,
        mc_se: sd / (values.len() as f64).sqrt(),
        coverage,
        successes: values.len(),
        failures,
        estimates: values,
    }
}

/// Repeatedly generates trials at each sample size, runs the estimator
/// battery and compares with the oracle truths.
///
/// Replication `r` at grid position `g` uses the stream `(seed, g * reps + r)`.
pub fn run_benchmark(
    spec: &SimulationSpec,
    oracle: &OracleTruth,
    opts: &BenchmarkOptions,
    seed: u64,
) -> Result<BenchmarkReport, SimError> {
    if opts.reps < 50 {
        return Err(SimError::TooFewReps(opts.reps));
    }
    spec.validate()?;
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    let mut failures = BTreeMap::new();
    for (g, &n) in opts.n_grid.iter().enumerate() {
        let sized = spec.with_arm_size(n);
        let outcomes: Vec<Result<RepOutcome, String>> = (0..opts.reps)
            .into_par_iter()
            .map(|r| run_rep(&sized, opts, rng::derive_seed(seed, (g * opts.reps + r) as u64)))
            .collect();
        let ok: Vec<&RepOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
        for o in &outcomes {
            if let Err(msg) = o {
                *failures.entry(msg.clone()).or_insert(0) += 1;
            }
        }
        let failed = outcomes.len() - ok.len();
        if ok.is_empty() {
            continue;
        }
        for (i, &method) in opts.methods.iter().enumerate() {
            let (target, truth) = target_of(method, oracle);
            let values = ok.iter().map(|o| o.estimates[i].0).collect();
            let cis = opts.bootstrap.map(|_| ok.iter().filter_map(|o| o.estimates[i].1).collect());
            rows.push(summarize(n, method.as_str().to_string(), target, truth.value, values, cis, failed));
        }
        if ok[0].p_plus_plus.is_some() {
            let values = ok.iter().filter_map(|o| o.p_plus_plus).collect();
            rows.push(summarize(n, "p_plus_plus".into(), "P(S++)", oracle.p_plus_plus.value, values, None, failed));
        }
        let mar = opts.methods.iter().position(|&m| m == Method::Mar);
        let pp = opts.methods.iter().position(|&m| m == Method::AcePlusPlus);
        if let (Some(a), Some(b)) = (mar, pp) {
            let g: Vec<f64> = ok.iter().map(|o| (o.estimates[a].0 - o.estimates[b].0).abs()).collect();
            gaps.push(GapRow {
                n_per_arm: n,
                mean_abs_gap: stats::mean(&g),
                max_abs_gap: g.iter().copied().fold(0.0, f64::max),
                reps: g.len(),
            });
        }
    }
    Ok(BenchmarkReport { oracle: *oracle, rows, gaps, failures })
}
