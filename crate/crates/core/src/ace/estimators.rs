use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{AceError, CounterfactualQuantities, Method, StratumEstimate};
use crate::data::Arm;
use crate::frame::AnalysisFrame;
use crate::inference::{rubin_pool, RubinPool};
use crate::regression::OutcomeChain;
use crate::rng;
use crate::stats;

fn adherer_rows(frame: &AnalysisFrame, arm: Arm) -> impl Iterator<Item = (usize, f64)> + '_ {
    frame
        .rows
        .iter()
        .enumerate()
        .filter(move |(_, r)| r.arm == arm && r.adherent)
        .filter_map(|(j, r)| r.y.map(|y| (j, y)))
}

/// Virtual-twin estimator for `S*+`: observed outcomes of experimental-arm
/// adherers against `phi_0` evaluated at their covariates.
pub fn ace_s_star_plus(frame: &AnalysisFrame, cq: &CounterfactualQuantities) -> Result<StratumEstimate, AceError> {
    let (mut n, mut sum_y, mut sum_phi) = (0usize, 0.0, 0.0);
    for (j, y) in adherer_rows(frame, Arm::Experimental) {
        n += 1;
        sum_y += y;
        sum_phi += cq.phi[0][j];
    }
    if n == 0 {
        return Err(AceError::NoAdherers(Arm::Experimental));
    }
    Ok(StratumEstimate::new(Method::AceStarPlus, sum_phi / n as f64, sum_y / n as f64))
}

/// Principal-score weighted estimator for `S++`.
///
/// The arm-`t` mean is a weighted average of `phi_t` over adherers of the
/// other arm, with weights `h_t`; integrating over `Z(t)` turns the weighted
/// sum into `sum(varphi_t) / sum(h_t)`.
pub fn ace_s_plus_plus(frame: &AnalysisFrame, cq: &CounterfactualQuantities) -> Result<StratumEstimate, AceError> {
    let mut means = [0.0; 2];
    for t in Arm::BOTH {
        let (mut num, mut den, mut n) = (0.0, 0.0, 0usize);
        for (j, _) in adherer_rows(frame, t.other()) {
            num += cq.varphi[t.index()][j];
            den += cq.h[t.index()][j];
            n += 1;
        }
        if n == 0 {
            return Err(AceError::NoAdherers(t.other()));
        }
        if den <= 0.0 {
            return Err(AceError::ZeroDenominator(t.other()));
        }
        means[t.index()] = num / den;
    }
    Ok(StratumEstimate::new(Method::AcePlusPlus, means[0], means[1]))
}

/// Estimated proportion of subjects who would adhere to both arms.
pub fn estimate_p_plus_plus(frame: &AnalysisFrame, cq: &CounterfactualQuantities) -> f64 {
    let total: f64 = frame
        .rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.adherent && r.y.is_some())
        .map(|(j, r)| cq.h[r.arm.other().index()][j])
        .sum();
    total / frame.rows.len() as f64
}

/// Difference of observed adherer means.
pub fn naive_adherers(frame: &AnalysisFrame) -> Result<StratumEstimate, AceError> {
    let mut means = [0.0; 2];
    for arm in Arm::BOTH {
        let ys: Vec<f64> = adherer_rows(frame, arm).map(|(_, y)| y).collect();
        if ys.is_empty() {
            return Err(AceError::NoAdherers(arm));
        }
        means[arm.index()] = stats::mean(&ys);
    }
    Ok(StratumEstimate::new(Method::Naive, means[0], means[1]))
}

/// Hypothetical-strategy estimate: `phi_t` averaged over every randomized
/// subject, valid when dropout is missing at random given `X` and `Z`.
pub fn hypothetical_mar(frame: &AnalysisFrame, chains: &[OutcomeChain; 2]) -> Result<StratumEstimate, AceError> {
    if frame.rows.is_empty() {
        return Err(AceError::EmptyArm(Arm::Reference));
    }
    let n = frame.rows.len() as f64;
    let mean = |c: &OutcomeChain| frame.rows.iter().map(|r| c.compose_phi(&r.x)).sum::<f64>() / n;
    Ok(StratumEstimate::new(Method::Mar, mean(&chains[0]), mean(&chains[1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct J2rEstimate {
    pub estimate: StratumEstimate,
    pub pool: RubinPool,
    /// Completed-data differences, one per imputation.
    pub imputations: Vec<f64>,
}

/// Jump-to-reference multiple imputation.
///
/// Missing outcomes in both arms are drawn from the reference chain given
/// `X` and the observed intermediate prefix, with Gaussian residual noise.
/// Each imputation refits the reference chain on a bootstrap resample of the
/// reference arm so that parameter uncertainty enters the between-imputation
/// variance; the full-data fit is used if a resample cannot be fitted.
pub fn j2r_estimate(
    frame: &AnalysisFrame,
    reference: &OutcomeChain,
    m: usize,
    seed: u64,
) -> Result<J2rEstimate, AceError> {
    for arm in Arm::BOTH {
        if frame.arm_size(arm) == 0 {
            return Err(AceError::EmptyArm(arm));
        }
    }
    let any_missing = frame.rows.iter().any(|r| r.y.is_none());
    let ref_rows = frame.arm_indices(Arm::Reference);
    let mut diffs = Vec::with_capacity(m);
    let mut within = Vec::with_capacity(m);
    let mut means = [0.0; 2];
    for i in 0..m as u64 {
        let refit;
        let chain = if any_missing {
            let mut r = rng::stream(seed, 2 * i);
            let idx: Vec<usize> = (0..ref_rows.len()).map(|_| ref_rows[r.random_range(0..ref_rows.len())]).collect();
            refit = OutcomeChain::fit(&frame.resample(&idx), Arm::Reference).ok();
            refit.as_ref().unwrap_or(reference)
        } else {
            reference
        };
        let mut r = rng::stream(seed, 2 * i + 1);
        let mut completed: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for row in &frame.rows {
            let y = match row.y {
                Some(y) => y,
                None => {
                    let mut z = row.observed_z_prefix();
                    for v in z.len()..chain.n_visits() {
                        let e: f64 = r.sample(StandardNormal);
                        z.push(chain.predict_z(v, &row.x, &z) + chain.z_models[v].residual_sd * e);
                    }
                    let e: f64 = r.sample(StandardNormal);
                    chain.predict_y(&row.x, &z) + chain.y_model.residual_sd * e
                }
            };
            completed[row.arm.index()].push(y);
        }
        let m0 = stats::mean(&completed[0]);
        let m1 = stats::mean(&completed[1]);
        means[0] += m0;
        means[1] += m1;
        diffs.push(m1 - m0);
        within.push(
            stats::sample_variance(&completed[0]) / completed[0].len() as f64
                + stats::sample_variance(&completed[1]) / completed[1].len() as f64,
        );
    }
    let pool = rubin_pool(&diffs, &within)?;
    let mut estimate = StratumEstimate::new(Method::J2r, means[0] / m as f64, means[1] / m as f64);
    estimate.se = Some(pool.se);
    Ok(J2rEstimate { estimate, pool, imputations: diffs })
}
