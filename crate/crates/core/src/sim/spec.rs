use serde::{Deserialize, Serialize};

use super::SimError;
use crate::data::{Covariate, CovariateSchema, Visit};
use crate::regression::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum CovariateDist {
    Normal { mean: f64, sd: f64 },
    /// The first level is the regression reference level.
    Categorical { levels: Vec<String>, probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    #[serde(flatten)]
    pub dist: CovariateDist,
}

/// `intercept + coefficients . regressors + sd * N(0, 1)`.
///
/// An empty coefficient list means all slopes are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSpec {
    pub intercept: f64,
    #[serde(default)]
    pub coefficients: Vec<f64>,
    pub sd: f64,
}

/// Log-odds `intercept + coefficients . regressors`; an empty coefficient
/// list means all slopes are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticSpec {
    pub intercept: f64,
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

pub(crate) fn dot(intercept: f64, coefficients: &[f64], head: &[f64], tail: &[f64]) -> f64 {
    if coefficients.is_empty() {
        return intercept;
    }
    intercept + coefficients.iter().zip(head.iter().chain(tail)).map(|(b, v)| b * v).sum::<f64>()
}

impl LinearSpec {
    pub fn mean(&self, head: &[f64], tail: &[f64]) -> f64 {
        dot(self.intercept, &self.coefficients, head, tail)
    }
}

impl LogisticSpec {
    pub fn probability(&self, head: &[f64], tail: &[f64]) -> f64 {
        sigmoid(dot(self.intercept, &self.coefficients, head, tail))
    }
}

/// Share of clinical ICEs attributed to lack of efficacy, on the log-odds
/// scale, as a function of the last measured intermediate value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoeShare {
    pub intercept: f64,
    #[serde(default)]
    pub efficacy_slope: f64,
}

/// Generative model of one arm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    /// Model `k` regresses on the baseline regressors then `Z_1..Z_k-1`.
    pub z_models: Vec<LinearSpec>,
    /// Regresses on the baseline regressors then every intermediate.
    pub y_model: LinearSpec,
    /// Per interval: log-odds of no clinical ICE given at risk, on the
    /// baseline regressors then the intermediates measured before the interval.
    pub adherence: Vec<LogisticSpec>,
    pub loe_share: LoeShare,
}

/// Synthetic two-arm trial: baseline covariates, per-arm sequential outcome
/// models, per-arm interval adherence models and a treatment-independent
/// administrative ICE process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n_reference: usize,
    pub n_experimental: usize,
    pub d_max: f64,
    pub visits: Vec<Visit>,
    pub covariates: Vec<CovariateSpec>,
    pub reference: ArmSpec,
    pub experimental: ArmSpec,
    /// Per interval: log-odds of no administrative ICE, on the baseline
    /// regressors only. Shared by both arms.
    #[serde(default)]
    pub admin: Vec<LogisticSpec>,
    /// Probability that a clinical ICE is recorded as AE and LoE at once.
    #[serde(default)]
    pub concurrent_share: f64,
    /// Coefficient of the standardized outcome residual in every adherence
    /// log-odds. Nonzero values make adherence depend on the outcome beyond
    /// `X` and `Z`, breaking ignorable adherence.
    #[serde(default)]
    pub a5_violation: f64,
}

impl SimulationSpec {
    pub fn arm(&self, t: usize) -> &ArmSpec {
        if t == 0 {
            &self.reference
        } else {
            &self.experimental
        }
    }

    pub fn schema(&self) -> Result<CovariateSchema, SimError> {
        let covariates = self
            .covariates
            .iter()
            .map(|c| match &c.dist {
                CovariateDist::Normal { .. } => Covariate::continuous(&c.name),
                CovariateDist::Categorical { levels, .. } => {
                    let levels: Vec<&str> = levels.iter().map(String::as_str).collect();
                    Covariate::categorical(&c.name, &levels)
                }
            })
            .collect();
        CovariateSchema::new(covariates, self.visits.clone(), self.d_max).map_err(|e| SimError::InvalidSpec(e.to_string()))
    }

    pub fn n_regressors(&self) -> usize {
        self.covariates
            .iter()
            .map(|c| match &c.dist {
                CovariateDist::Normal { .. } => 1,
                CovariateDist::Categorical { levels, .. } => levels.len().saturating_sub(1),
            })
            .sum()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidSpec(m));
        if self.n_reference == 0 || self.n_experimental == 0 {
            return bad("both arms need at least one subject".into());
        }
        self.schema()?;
        for c in &self.covariates {
            match &c.dist {
                CovariateDist::Normal { mean, sd } => {
                    if !(mean.is_finite() && sd.is_finite() && *sd >= 0.0) {
                        return bad(format!("covariate `{}`: invalid normal parameters", c.name));
                    }
                }
                CovariateDist::Categorical { levels, probs } => {
                    let total: f64 = probs.iter().sum();
                    if probs.len() != levels.len() || probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                        return bad(format!("covariate `{}`: probabilities must match the levels and sum to 1", c.name));
                    }
                }
            }
        }
        let p = self.n_regressors();
        let k = self.visits.len();
        let check_len = |what: String, got: usize, want: usize| -> Result<(), SimError> {
            if got != 0 && got != want {
                return Err(SimError::InvalidSpec(format!("{what}: {got} coefficients, expected {want}")));
            }
            Ok(())
        };
        for (t, arm) in [(0, &self.reference), (1, &self.experimental)] {
            if arm.z_models.len() != k {
                return bad(format!("arm {t}: {} intermediate models for {k} visits", arm.z_models.len()));
            }
            if arm.adherence.len() != k + 1 {
                return bad(format!("arm {t}: {} adherence models for {} intervals", arm.adherence.len(), k + 1));
            }
            for (v, m) in arm.z_models.iter().enumerate() {
                check_len(format!("arm {t} intermediate model {}", v + 1), m.coefficients.len(), p + v)?;
                if !(m.sd >= 0.0) {
                    return bad(format!("arm {t}: residual SDs must be nonnegative"));
                }
            }
            check_len(format!("arm {t} outcome model"), arm.y_model.coefficients.len(), p + k)?;
            if !(arm.y_model.sd >= 0.0) {
                return bad(format!("arm {t}: residual SDs must be nonnegative"));
            }
            for (i, m) in arm.adherence.iter().enumerate() {
                check_len(format!("arm {t} adherence interval {}", i + 1), m.coefficients.len(), p + i)?;
            }
        }
        if !self.admin.is_empty() && self.admin.len() != k + 1 {
            return bad(format!("{} administrative models for {} intervals", self.admin.len(), k + 1));
        }
        for (i, m) in self.admin.iter().enumerate() {
            check_len(format!("administrative interval {}", i + 1), m.coefficients.len(), p)?;
        }
        if !(0.0..=1.0).contains(&self.concurrent_share) {
            return bad("concurrent_share must lie in [0, 1]".into());
        }
        if !self.a5_violation.is_finite() {
            return bad("a5_violation must be finite".into());
        }
        Ok(())
    }

    /// Desk-scale fixture shaped like a 52-week glycaemic-control trial:
    /// seven baseline covariates, intermediate measurements at weeks 12
    /// and 26, and weak dependence of clinical ICEs on efficacy.
    pub fn hba1c_like() -> Self {
        let normal = |name: &str, mean: f64, sd: f64| CovariateSpec { name: name.into(), dist: CovariateDist::Normal { mean, sd } };
        let covariates = vec![
            normal("age", 57.0, 10.0),
            CovariateSpec {
                name: "gender".into(),
                dist: CovariateDist::Categorical { levels: vec!["F".into(), "M".into()], probs: vec![0.45, 0.55] },
            },
            normal("hba1c", 8.1, 0.9),
            normal("ldl_c", 2.7, 0.8),
            normal("tg", 1.9, 0.8),
            normal("fsg", 9.4, 2.4),
            normal("alt", 26.0, 9.0),
        ];
        // Regressor order: age, gender[M], hba1c, ldl_c, tg, fsg, alt.
        let lin = |intercept: f64, coefficients: &[f64], sd: f64| LinearSpec { intercept, coefficients: coefficients.to_vec(), sd };
        let logit = |intercept: f64, coefficients: &[f64]| LogisticSpec { intercept, coefficients: coefficients.to_vec() };
        let reference = ArmSpec {
            z_models: vec![
                lin(2.09, &[0.002, 0.05, -0.35, 0.02, 0.03, 0.02, 0.0], 0.45),
                lin(0.72, &[0.0, 0.0, -0.1, 0.0, 0.0, 0.0, 0.0, 0.7], 0.4),
            ],
            y_model: lin(0.395, &[0.0, 0.0, -0.05, 0.0, 0.0, 0.0, 0.0, 0.2, 0.6], 0.5),
            adherence: vec![
                logit(3.47, &[-0.01, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
                logit(2.91, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.3]),
                logit(2.31, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.3]),
            ],
            loe_share: LoeShare { intercept: -1.5, efficacy_slope: 0.8 },
        };
        let experimental = ArmSpec {
            z_models: vec![
                lin(2.0, &[0.002, 0.05, -0.45, 0.02, 0.03, 0.02, 0.0], 0.5),
                lin(0.35, &[0.0, 0.0, -0.1, 0.0, 0.0, 0.0, 0.0, 0.7], 0.4),
            ],
            y_model: lin(0.875, &[0.0, 0.0, -0.05, 0.0, 0.0, 0.0, 0.0, 0.2, 0.6], 0.5),
            adherence: vec![
                logit(3.07, &[-0.01, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
                logit(2.7, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.3]),
                logit(2.3, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -0.3]),
            ],
            loe_share: LoeShare { intercept: -1.5, efficacy_slope: 0.8 },
        };
        SimulationSpec {
            n_reference: 300,
            n_experimental: 300,
            d_max: 52.0,
            visits: vec![Visit::new("w12", 12.0), Visit::new("w26", 26.0)],
            covariates,
            reference,
            experimental,
            admin: vec![logit(4.0, &[]), logit(4.0, &[]), logit(4.0, &[])],
            concurrent_share: 0.02,
            a5_violation: 0.0,
        }
    }

    /// Compact two-covariate spec in which both arms share one model, so
    /// every true effect is zero. Clinical ICEs depend on the intermediates.
    pub fn null_effect() -> Self {
        let lin = |intercept: f64, coefficients: &[f64], sd: f64| LinearSpec { intercept, coefficients: coefficients.to_vec(), sd };
        let logit = |intercept: f64, coefficients: &[f64]| LogisticSpec { intercept, coefficients: coefficients.to_vec() };
        // Regressor order: age, hba1c.
        let arm = ArmSpec {
            z_models: vec![lin(2.5, &[0.0, -0.35], 0.45), lin(0.6, &[0.0, -0.1, 0.7], 0.4)],
            y_model: lin(0.1, &[0.002, -0.05, 0.2, 0.6], 0.5),
            adherence: vec![
                logit(3.47, &[-0.01, 0.0]),
                logit(2.9, &[0.0, 0.0, -0.3]),
                logit(2.3, &[0.0, 0.0, 0.0, -0.3]),
            ],
            loe_share: LoeShare { intercept: -1.5, efficacy_slope: 0.8 },
        };
        SimulationSpec {
            n_reference: 200,
            n_experimental: 200,
            d_max: 52.0,
            visits: vec![Visit::new("w12", 12.0), Visit::new("w26", 26.0)],
            covariates: vec![
                CovariateSpec { name: "age".into(), dist: CovariateDist::Normal { mean: 57.0, sd: 10.0 } },
                CovariateSpec { name: "hba1c".into(), dist: CovariateDist::Normal { mean: 8.1, sd: 0.9 } },
            ],
            reference: arm.clone(),
            experimental: arm,
            admin: vec![logit(4.0, &[]), logit(4.0, &[]), logit(4.0, &[])],
            concurrent_share: 0.02,
            a5_violation: 0.0,
        }
    }

    /// [`hba1c_like`](Self::hba1c_like) with no ICEs of any kind.
    pub fn no_ice() -> Self {
        let mut spec = Self::hba1c_like();
        for arm in [&mut spec.reference, &mut spec.experimental] {
            for m in &mut arm.adherence {
                *m = LogisticSpec { intercept: 40.0, coefficients: vec![] };
            }
        }
        spec.admin.clear();
        spec
    }

    /// Copy with both arm sizes set to `n`.
    pub fn with_arm_size(&self, n: usize) -> Self {
        SimulationSpec { n_reference: n, n_experimental: n, ..self.clone() }
    }
}
