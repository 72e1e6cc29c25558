use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AdherenceModel;
use crate::frame::AnalysisFrame;
use crate::regression::OutcomeChain;
use crate::rng;

/// How `h_t` and `varphi_t` are integrated over `Z(t) | X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Integration {
    /// Average over draws from the chain's Gaussian residual models.
    MonteCarlo { draws: usize },
    /// Evaluate once at the chained predicted intermediates.
    PlugIn,
}

impl Default for Integration {
    fn default() -> Self {
        Integration::MonteCarlo { draws: 200 }
    }
}

/// Per-subject model-based quantities under both treatments, indexed by
/// [`Arm::index`](crate::data::Arm::index) and then by frame row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualQuantities {
    /// `E[Y(t) | X]`.
    pub phi: [Vec<f64>; 2],
    /// `E[P(A(t) = 1 | X, Z(t)) | X]`.
    pub h: [Vec<f64>; 2],
    /// `E[P(A(t) = 1 | X, Z(t)) * E[Y(t) | X, Z(t)] | X]`.
    pub varphi: [Vec<f64>; 2],
}

/// Integrates one subject under one arm; returns `(h, varphi)`.
fn integrate(
    chain: &OutcomeChain,
    adherence: &AdherenceModel,
    x: &[f64],
    integration: Integration,
    seed: u64,
) -> (f64, f64) {
    let k = chain.n_visits();
    let mut z = vec![0.0; k];
    match integration {
        Integration::PlugIn => {
            for v in 0..k {
                z[v] = chain.predict_z(v, x, &z[..v]);
            }
            let p = adherence.probability(x, &z);
            (p, p * chain.predict_y(x, &z))
        }
        Integration::MonteCarlo { draws } => {
            let mut r = rng::stream(seed, 0);
            let (mut h, mut varphi) = (0.0, 0.0);
            for _ in 0..draws {
                for v in 0..k {
                    let e: f64 = r.sample(StandardNormal);
                    z[v] = chain.predict_z(v, x, &z[..v]) + chain.z_models[v].residual_sd * e;
                }
                let p = adherence.probability(x, &z);
                h += p;
                varphi += p * chain.predict_y(x, &z);
            }
            (h / draws as f64, varphi / draws as f64)
        }
    }
}

/// `phi_t` for every subject and arm (no integration needed).
pub fn phi_only(frame: &AnalysisFrame, chains: &[OutcomeChain; 2]) -> [Vec<f64>; 2] {
    let phi = |c: &OutcomeChain| frame.rows.iter().map(|r| c.compose_phi(&r.x)).collect();
    [phi(&chains[0]), phi(&chains[1])]
}

/// Computes `phi_t`, `h_t` and `varphi_t` for every subject and both arms.
///
/// Subject `j` under arm `t` draws from its own stream derived from
/// `(seed, 2j + t)`, so results do not depend on thread scheduling.
pub fn counterfactual_quantities(
    frame: &AnalysisFrame,
    chains: &[OutcomeChain; 2],
    adherence: &[AdherenceModel; 2],
    integration: Integration,
    seed: u64,
) -> CounterfactualQuantities {
    if let Integration::MonteCarlo { draws } = integration {
        assert!(draws >= 1, "Monte Carlo integration needs at least one draw");
    }
    let per_subject: Vec<[(f64, f64); 2]> = frame
        .rows
        .par_iter()
        .enumerate()
        .map(|(j, row)| {
            [0, 1].map(|t| {
                let tag = 2 * j as u64 + t as u64;
                integrate(&chains[t], &adherence[t], &row.x, integration, rng::derive_seed(seed, tag))
            })
        })
        .collect();
    let pick = |t: usize, second: bool| -> Vec<f64> {
        per_subject.iter().map(|s| if second { s[t].1 } else { s[t].0 }).collect()
    };
    CounterfactualQuantities {
        phi: phi_only(frame, chains),
        h: [pick(0, false), pick(1, false)],
        varphi: [pick(0, true), pick(1, true)],
    }
}
