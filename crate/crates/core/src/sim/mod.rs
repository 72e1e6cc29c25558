//! Synthetic two-arm trials with both potential outcomes materialized, a
//! brute-force oracle for the stratum effects and an estimator benchmark.
//!
//! The generative model draws baseline covariates, then each potential world
//! independently given them: intermediates, outcome, and interval-wise ICEs
//! whose probabilities depend on the baseline covariates and the
//! intermediates measured so far. Treatment is assigned at random and the
//! observed record is the assigned world with post-ICE data masked.

mod benchmark;
mod generate;
mod oracle;
mod spec;

use thiserror::Error;

pub use benchmark::{run_benchmark, target_of, BenchmarkOptions, BenchmarkReport, BenchmarkRow, GapRow};
pub use generate::{draw_subject, generate_trial, observe, PotentialSubject, PotentialWorld, SampleEffects, SimulationTruth};
pub use oracle::{oracle_truth, with_stratum_effect, OracleTruth, TruthValue, MIN_STRATUM_PROBABILITY};
pub use spec::{ArmSpec, CovariateDist, CovariateSpec, LinearSpec, LoeShare, LogisticSpec, SimulationSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),
    #[error("oracle needs at least 100000 draws, got {0}")]
    TooFewDraws(usize),
    #[error("stratum {stratum} has probability {probability:.2e}; its truth is unreliable")]
    RareStratum { stratum: &'static str, probability: f64 },
    #[error("benchmark needs at least 50 replications, got {0}")]
    TooFewReps(usize),
}
