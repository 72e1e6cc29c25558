use serde::{Deserialize, Serialize};

use super::{
    ace_s_plus_plus, ace_s_star_plus, counterfactual_quantities, estimate_p_plus_plus, hypothetical_mar,
    j2r_estimate, naive_adherers, phi_only, AceError, AdherenceModel, CounterfactualQuantities, Integration, Method,
    StratumEstimate,
};
use crate::data::Arm;
use crate::frame::AnalysisFrame;
use crate::inference::RubinPool;
use crate::regression::{LogisticOptions, OutcomeChain};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AceOptions {
    pub integration: Integration,
    pub j2r_imputations: usize,
    pub logistic: LogisticOptions,
}

impl Default for AceOptions {
    fn default() -> Self {
        AceOptions { integration: Integration::default(), j2r_imputations: 20, logistic: LogisticOptions::default() }
    }
}

/// Models and per-subject quantities behind one run of the battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub chains: [OutcomeChain; 2],
    pub adherence: Option<[AdherenceModel; 2]>,
    /// `h` and `varphi` are empty unless the adherence models were fitted.
    pub quantities: CounterfactualQuantities,
}

impl FittedPipeline {
    /// Fits both outcome chains and, if `with_adherence`, both adherence
    /// models and the integrated quantities.
    pub fn fit(frame: &AnalysisFrame, with_adherence: bool, opts: &AceOptions, seed: u64) -> Result<Self, AceError> {
        let chain = |arm: Arm| {
            OutcomeChain::fit(frame, arm)
                .map_err(|source| AceError::Fit { context: format!("arm {arm} outcome chain"), source })
        };
        let chains = [chain(Arm::Reference)?, chain(Arm::Experimental)?];
        if !with_adherence {
            let quantities = CounterfactualQuantities { phi: phi_only(frame, &chains), h: Default::default(), varphi: Default::default() };
            return Ok(FittedPipeline { chains, adherence: None, quantities });
        }
        let adherence = [
            AdherenceModel::fit(frame, Arm::Reference, &opts.logistic)?,
            AdherenceModel::fit(frame, Arm::Experimental, &opts.logistic)?,
        ];
        let quantities = counterfactual_quantities(frame, &chains, &adherence, opts.integration, seed);
        Ok(FittedPipeline { chains, adherence: Some(adherence), quantities })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Battery {
    pub estimates: Vec<StratumEstimate>,
    /// Present when the `S++` estimator ran.
    pub p_plus_plus: Option<f64>,
    /// Rubin pooling details when jump to reference ran.
    pub j2r_pool: Option<RubinPool>,
}

impl Battery {
    pub fn get(&self, method: Method) -> Option<&StratumEstimate> {
        self.estimates.iter().find(|e| e.method == method)
    }
}

/// Runs the requested estimators on one frame, in the order given.
pub fn run_battery(frame: &AnalysisFrame, methods: &[Method], opts: &AceOptions, seed: u64) -> Result<Battery, AceError> {
    let needs_chains = methods.iter().any(|&m| m != Method::Naive);
    let needs_adherence = methods.contains(&Method::AcePlusPlus);
    let pipeline = if needs_chains {
        Some(FittedPipeline::fit(frame, needs_adherence, opts, rng::derive_seed(seed, 1))?)
    } else {
        None
    };
    let mut battery = Battery { estimates: Vec::with_capacity(methods.len()), p_plus_plus: None, j2r_pool: None };
    for &method in methods {
        let p = pipeline.as_ref();
        let estimate = match method {
            Method::Naive => naive_adherers(frame)?,
            Method::AceStarPlus => ace_s_star_plus(frame, &p.expect("chains fitted").quantities)?,
            Method::AcePlusPlus => {
                let cq = &p.expect("chains fitted").quantities;
                battery.p_plus_plus = Some(estimate_p_plus_plus(frame, cq));
                ace_s_plus_plus(frame, cq)?
            }
            Method::Mar => hypothetical_mar(frame, &p.expect("chains fitted").chains)?,
            Method::J2r => {
                let chains = &p.expect("chains fitted").chains;
                let j2r = j2r_estimate(frame, &chains[0], opts.j2r_imputations, rng::derive_seed(seed, 2))?;
                battery.j2r_pool = Some(j2r.pool);
                j2r.estimate
            }
        };
        battery.estimates.push(estimate);
    }
    Ok(battery)
}
