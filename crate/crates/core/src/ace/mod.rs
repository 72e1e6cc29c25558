//! Adherence causal estimators (ACE) for principal strata defined by
//! adherence, and the comparator battery.
//!
//! Strata: `S**` is everyone, `S*+` those who would adhere to the
//! experimental arm, `S++` those who would adhere to both arms.

mod adherence;
mod battery;
mod counterfactual;
mod estimators;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Arm;
use crate::inference::InferenceError;
use crate::regression::RegressionError;

pub use adherence::{fit_adherence_model, AdherenceModel, IntervalModel};
pub use battery::{run_battery, AceOptions, Battery, FittedPipeline};
pub use counterfactual::{counterfactual_quantities, phi_only, CounterfactualQuantities, Integration};
pub use estimators::{
    ace_s_plus_plus, ace_s_star_plus, estimate_p_plus_plus, hypothetical_mar, j2r_estimate, naive_adherers,
    J2rEstimate,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AceError {
    #[error("arm {0} has no adherers with an observed outcome")]
    NoAdherers(Arm),
    #[error("arm {0} has no subjects")]
    EmptyArm(Arm),
    #[error("arm {arm}: no subjects at risk at the start of interval {interval}")]
    NoAtRisk { arm: Arm, interval: usize },
    #[error("adherence weights sum to zero over arm {0} adherers")]
    ZeroDenominator(Arm),
    #[error("{context}: {source}")]
    Fit { context: String, source: RegressionError },
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Difference of observed adherer means; not a causal contrast.
    Naive,
    #[serde(rename = "ace_s_star_plus")]
    AceStarPlus,
    #[serde(rename = "ace_s_plus_plus")]
    AcePlusPlus,
    /// Hypothetical strategy under missing at random.
    Mar,
    /// Jump to reference multiple imputation.
    J2r,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Naive, Method::AceStarPlus, Method::AcePlusPlus, Method::Mar, Method::J2r];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::AceStarPlus => "ace_s_star_plus",
            Method::AcePlusPlus => "ace_s_plus_plus",
            Method::Mar => "mar",
            Method::J2r => "j2r",
        }
    }

    pub fn stratum(self) -> Stratum {
        match self {
            Method::Naive => Stratum::ObservedAdherers,
            Method::AceStarPlus => Stratum::StarPlus,
            Method::AcePlusPlus => Stratum::PlusPlus,
            Method::Mar | Method::J2r => Stratum::StarStar,
        }
    }

    pub fn is_causal(self) -> bool {
        self != Method::Naive
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown estimator `{s}`"))
    }
}

/// Population a [`StratumEstimate`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stratum {
    #[serde(rename = "S**")]
    StarStar,
    #[serde(rename = "S*+")]
    StarPlus,
    #[serde(rename = "S++")]
    PlusPlus,
    /// Observed adherers of each arm; differs between arms.
    #[serde(rename = "adherers")]
    ObservedAdherers,
}

impl Stratum {
    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::StarStar => "S**",
            Stratum::StarPlus => "S*+",
            Stratum::PlusPlus => "S++",
            Stratum::ObservedAdherers => "adherers",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratumEstimate {
    pub method: Method,
    pub stratum: Stratum,
    pub mean0: f64,
    pub mean1: f64,
    /// `mean1 - mean0`.
    pub diff: f64,
    /// Standard error of `diff`, once available.
    pub se: Option<f64>,
    /// Standard errors of `mean0` and `mean1`, once available.
    pub arm_se: Option<[f64; 2]>,
    pub ci: Option<(f64, f64)>,
}

impl StratumEstimate {
    pub fn new(method: Method, mean0: f64, mean1: f64) -> Self {
        StratumEstimate {
            method,
            stratum: method.stratum(),
            mean0,
            mean1,
            diff: mean1 - mean0,
            se: None,
            arm_se: None,
            ci: None,
        }
    }
}
