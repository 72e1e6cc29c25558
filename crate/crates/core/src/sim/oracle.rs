use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::draw_subject;
use super::spec::SimulationSpec;
use super::SimError;
use crate::rng;

/// A Monte Carlo truth with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruthValue {
    pub value: f64,
    pub mc_se: f64,
    /// Fraction of draws in the stratum.
    pub probability: f64,
}

/// Population truths of the generative model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleTruth {
    /// `E[Y(1) - Y(0)]` over everyone.
    pub star_star: TruthValue,
    /// `E[Y(1) - Y(0) | A(1) = 1]`.
    pub star_plus: TruthValue,
    /// `E[Y(1) - Y(0) | A(0) = 1, A(1) = 1]`.
    pub plus_plus: TruthValue,
    /// `P(A(0) = 1, A(1) = 1)`; its `probability` field repeats the value.
    pub p_plus_plus: TruthValue,
    pub draws: usize,
}

/// Smallest stratum probability for which a truth is reported.
pub const MIN_STRATUM_PROBABILITY: f64 = 1e-3;

#[derive(Default, Clone, Copy)]
struct Acc {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Acc {
    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn merge(self, o: Acc) -> Acc {
        Acc { n: self.n + o.n, sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq }
    }

    fn truth(&self, stratum: &'static str, total: usize) -> Result<TruthValue, SimError> {
        let probability = self.n as f64 / total as f64;
        if probability < MIN_STRATUM_PROBABILITY || self.n < 2 {
            return Err(SimError::RareStratum { stratum, probability });
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        Ok(TruthValue { value: mean, mc_se: (var / n).sqrt(), probability })
    }
}

/// Brute-force truths: draws `draws` subjects with both potential worlds
/// and averages the individual effects within each stratum.
pub fn oracle_truth(spec: &SimulationSpec, draws: usize, seed: u64) -> Result<OracleTruth, SimError> {
    spec.validate()?;
    if draws < 100_000 {
        return Err(SimError::TooFewDraws(draws));
    }
    const CHUNK: usize = 4096;
    let chunks = draws.div_ceil(CHUNK);
    let stream_seed = rng::derive_seed(seed, 0x0AC1E);
    let acc = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut a = [Acc::default(); 3];
            for j in c * CHUNK..((c + 1) * CHUNK).min(draws) {
                let p = draw_subject(spec, stream_seed, j as u64);
                let e = p.effect();
                a[0].push(e);
                if p.in_star_plus() {
                    a[1].push(e);
                }
                if p.in_plus_plus() {
                    a[2].push(e);
                }
            }
            a
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold([Acc::default(); 3], |x, y| [x[0].merge(y[0]), x[1].merge(y[1]), x[2].merge(y[2])]);
    let p = acc[2].n as f64 / draws as f64;
    Ok(OracleTruth {
        star_star: acc[0].truth("S**", draws)?,
        star_plus: acc[1].truth("S*+", draws)?,
        plus_plus: acc[2].truth("S++", draws)?,
        p_plus_plus: TruthValue { value: p, mc_se: (p * (1.0 - p) / draws as f64).sqrt(), probability: p },
        draws,
    })
}

/// Copy of `spec` whose experimental outcome intercept is shifted so that
/// the oracle `S++` effect (at the same draws and seed) equals `target`.
///
/// Adherence never depends on the outcome intercept, so the shift moves
/// every individual effect by the same amount and leaves the strata as
/// they were.
pub fn with_stratum_effect(
    spec: &SimulationSpec,
    target: f64,
    draws: usize,
    seed: u64,
) -> Result<(SimulationSpec, OracleTruth), SimError> {
    let before = oracle_truth(spec, draws, seed)?;
    let mut out = spec.clone();
    out.experimental.y_model.intercept += target - before.plus_plus.value;
    let after = oracle_truth(&out, draws, seed)?;
    Ok((out, after))
}
