use serde::{Deserialize, Serialize};

use super::DataError;

/// Measurement type of a baseline covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovariateKind {
    Continuous,
    /// Categorical with an ordered level list; the first level is the reference.
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariate {
    pub name: String,
    #[serde(flatten)]
    pub kind: CovariateKind,
}

impl Covariate {
    pub fn continuous(name: impl Into<String>) -> Self {
        Covariate { name: name.into(), kind: CovariateKind::Continuous }
    }

    pub fn categorical(name: impl Into<String>, levels: &[&str]) -> Self {
        Covariate {
            name: name.into(),
            kind: CovariateKind::Categorical {
                levels: levels.iter().map(|l| l.to_string()).collect(),
            },
        }
    }
}

/// A scheduled intermediate visit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub label: String,
    pub week: f64,
}

impl Visit {
    pub fn new(label: impl Into<String>, week: f64) -> Self {
        Visit { label: label.into(), week }
    }
}

/// Value of one baseline covariate for one subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CovariateValue {
    Continuous(f64),
    /// Index into the covariate's level list.
    Level(usize),
}

#[derive(Debug, Clone, Deserialize)]
struct RawSchema {
    #[serde(default)]
    covariates: Vec<Covariate>,
    #[serde(default)]
    visits: Vec<Visit>,
    d_max: f64,
}

/// Declared structure of a trial dataset: baseline covariates, the
/// intermediate visit schedule and the planned treatment duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema")]
pub struct CovariateSchema {
    covariates: Vec<Covariate>,
    visits: Vec<Visit>,
    d_max: f64,
}

impl TryFrom<RawSchema> for CovariateSchema {
    type Error = DataError;

    fn try_from(raw: RawSchema) -> Result<Self, Self::Error> {
        CovariateSchema::new(raw.covariates, raw.visits, raw.d_max)
    }
}

impl CovariateSchema {
    pub fn new(covariates: Vec<Covariate>, visits: Vec<Visit>, d_max: f64) -> Result<Self, DataError> {
        if !(d_max > 0.0 && d_max.is_finite()) {
            return Err(DataError::Schema(format!("d_max must be positive, got {d_max}")));
        }
        let mut seen = std::collections::HashSet::new();
        for c in &covariates {
            if !seen.insert(c.name.as_str()) {
                return Err(DataError::Schema(format!("duplicate covariate `{}`", c.name)));
            }
            if let CovariateKind::Categorical { levels } = &c.kind {
                if levels.is_empty() {
                    return Err(DataError::Schema(format!("covariate `{}` has no levels", c.name)));
                }
                let distinct: std::collections::HashSet<_> = levels.iter().collect();
                if distinct.len() != levels.len() {
                    return Err(DataError::Schema(format!(
                        "covariate `{}` has repeated levels",
                        c.name
                    )));
                }
            }
        }
        let mut labels = std::collections::HashSet::new();
        let mut previous = 0.0;
        for v in &visits {
            if !labels.insert(v.label.as_str()) {
                return Err(DataError::Schema(format!("duplicate visit label `{}`", v.label)));
            }
            if !(v.week > previous && v.week < d_max) {
                return Err(DataError::Schema(format!(
                    "visit `{}` at week {} must be after week {} and before d_max {}",
                    v.label, v.week, previous, d_max
                )));
            }
            previous = v.week;
        }
        Ok(CovariateSchema { covariates, visits, d_max })
    }

    pub fn covariates(&self) -> &[Covariate] {
        &self.covariates
    }

    pub fn visits(&self) -> &[Visit] {
        &self.visits
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariates.iter().position(|c| c.name == name)
    }

    /// Interval boundaries `0 = b_0 < visit weeks < d_max`.
    pub fn interval_boundaries(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.visits.iter().map(|v| v.week))
            .chain(std::iter::once(self.d_max))
            .collect()
    }

    /// Header of the delimited data file.
    pub fn column_names(&self) -> Vec<String> {
        let mut cols = vec!["id".to_string(), "treatment".to_string()];
        cols.extend(self.covariates.iter().map(|c| c.name.clone()));
        cols.extend(self.visits.iter().map(|v| format!("z_{}", v.label)));
        for c in ["y", "d_ae", "d_loe", "d_admin", "reason", "ae_flag", "loe_flag"] {
            cols.push(c.to_string());
        }
        cols
    }

    /// Names of the expanded baseline regressors (dummy-coded categoricals).
    pub fn regressor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for c in &self.covariates {
            match &c.kind {
                CovariateKind::Continuous => names.push(c.name.clone()),
                CovariateKind::Categorical { levels } => {
                    names.extend(levels.iter().skip(1).map(|l| format!("{}[{}]", c.name, l)))
                }
            }
        }
        names
    }

    /// Expands baseline values into the regressor vector (reference-level dummies).
    pub fn expand(&self, x: &[CovariateValue]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.covariates.len());
        for (c, v) in self.covariates.iter().zip(x) {
            match (&c.kind, v) {
                (CovariateKind::Continuous, CovariateValue::Continuous(value)) => out.push(*value),
                (CovariateKind::Categorical { levels }, CovariateValue::Level(level)) => {
                    out.extend((1..levels.len()).map(|l| if l == *level { 1.0 } else { 0.0 }))
                }
                (CovariateKind::Continuous, CovariateValue::Level(level)) => out.push(*level as f64),
                (CovariateKind::Categorical { levels }, CovariateValue::Continuous(_)) => {
                    out.extend(std::iter::repeat_n(f64::NAN, levels.len() - 1))
                }
            }
        }
        out
    }
}
