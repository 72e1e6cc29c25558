//! Run configuration read from a TOML file.
//!
//! ```toml
//! seed = 20240101
//! out = "results"
//!
//! [data]
//! path = "trial.csv"
//!
//! [schema]
//! d_max = 52.0
//! covariates = [{ name = "age", kind = "continuous" }]
//! visits = [{ label = "w12", week = 12.0 }, { label = "w26", week = 26.0 }]
//!
//! [analysis]
//! alpha = 0.05
//! bootstrap = 1000
//!
//! [simulation]
//! fixture = "hba1c_like"
//!
//! [benchmark]
//! reps = 200
//! n_grid = [500, 2000]
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ace::{AceOptions, Integration, Method};
use crate::data::CovariateSchema;
use crate::ice::ReclassifyOptions;
use crate::ice_estimands::{CiMethod, TestMethod};
use crate::inference::BootstrapOptions;
use crate::regression::LogisticOptions;
use crate::sim::SimulationSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    /// Schema file, used when the config has no inline `[schema]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMode {
    MonteCarlo,
    PlugIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub ci_method: CiMethod,
    pub test_method: TestMethod,
    /// Re-derive ICE causes from the disposition evidence before analysis.
    pub reclassify: bool,
    pub improvement_threshold: f64,
    pub efficacy_covariate: Option<String>,
    pub integration: IntegrationMode,
    pub mc_draws: usize,
    /// Bootstrap replicates.
    pub bootstrap: usize,
    pub j2r_imputations: usize,
    pub methods: Vec<Method>,
    /// Bucket width of the LoE timing histogram, in weeks.
    pub histogram_interval: f64,
    /// Write every bootstrap replicate to `replicates.csv`.
    pub dump_replicates: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            alpha: 0.05,
            ci_method: CiMethod::Wald,
            test_method: TestMethod::Fisher,
            reclassify: false,
            improvement_threshold: 0.0,
            efficacy_covariate: None,
            integration: IntegrationMode::MonteCarlo,
            mc_draws: 200,
            bootstrap: 1000,
            j2r_imputations: 20,
            methods: Method::ALL.to_vec(),
            histogram_interval: 4.0,
            dump_replicates: false,
        }
    }
}

impl AnalysisConfig {
    pub fn ace_options(&self) -> AceOptions {
        AceOptions {
            integration: match self.integration {
                IntegrationMode::MonteCarlo => Integration::MonteCarlo { draws: self.mc_draws },
                IntegrationMode::PlugIn => Integration::PlugIn,
            },
            j2r_imputations: self.j2r_imputations,
            logistic: LogisticOptions::default(),
        }
    }

    pub fn bootstrap_options(&self) -> BootstrapOptions {
        BootstrapOptions { replicates: self.bootstrap, alpha: self.alpha }
    }

    pub fn reclassify_options(&self) -> ReclassifyOptions {
        ReclassifyOptions {
            improvement_threshold: self.improvement_threshold,
            efficacy_covariate: self.efficacy_covariate.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fixture {
    Hba1cLike,
    NullEffect,
    NoIce,
}

impl Fixture {
    pub fn spec(self) -> SimulationSpec {
        match self {
            Fixture::Hba1cLike => SimulationSpec::hba1c_like(),
            Fixture::NullEffect => SimulationSpec::null_effect(),
            Fixture::NoIce => SimulationSpec::no_ice(),
        }
    }
}

/// Either a built-in fixture or a full inline spec, with optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub fixture: Option<Fixture>,
    pub spec: Option<SimulationSpec>,
    /// Overrides both arm sizes.
    pub n_per_arm: Option<usize>,
    /// Shifts the experimental outcome intercept so the oracle `S++`
    /// effect equals this value.
    pub stratum_effect: Option<f64>,
    #[serde(default = "default_oracle_draws")]
    pub oracle_draws: usize,
}

fn default_oracle_draws() -> usize {
    200_000
}

impl SimulationSection {
    pub fn base_spec(&self) -> Result<SimulationSpec, ConfigError> {
        let mut spec = match (&self.fixture, &self.spec) {
            (Some(f), None) => f.spec(),
            (None, Some(s)) => s.clone(),
            _ => return Err(ConfigError::Invalid("[simulation] needs exactly one of `fixture` or `spec`".into())),
        };
        if let Some(n) = self.n_per_arm {
            spec = spec.with_arm_size(n);
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub reps: usize,
    /// Subjects per arm.
    pub n_grid: Vec<usize>,
    pub methods: Vec<Method>,
    /// Bootstrap replicates per replication; coverage is reported when set.
    pub bootstrap: Option<usize>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            reps: 200,
            n_grid: vec![500],
            methods: vec![Method::Naive, Method::AceStarPlus, Method::AcePlusPlus, Method::Mar],
            bootstrap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub data: Option<DataSection>,
    pub schema: Option<CovariateSchema>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    pub simulation: Option<SimulationSection>,
    #[serde(default)]
    pub benchmark: BenchmarkConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(d) = &mut cfg.data {
            d.path = base.join(&d.path);
            if let Some(schema_path) = &mut d.schema {
                *schema_path = base.join(&*schema_path);
                if cfg.schema.is_some() {
                    return Err(ConfigError::Invalid("both [schema] and data.schema are set".into()));
                }
                let text = fs::read_to_string(&*schema_path)
                    .map_err(|source| ConfigError::Io { path: schema_path.clone(), source })?;
                cfg.schema = Some(toml::from_str(&text)?);
            }
        }
        if let Some(o) = &mut cfg.out {
            *o = base.join(&*o);
        }
        Ok(cfg)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.into()));
        let a = &self.analysis;
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            return bad("analysis.alpha must lie in (0, 1)");
        }
        if a.bootstrap < 100 {
            return bad("analysis.bootstrap must be at least 100");
        }
        if a.mc_draws == 0 {
            return bad("analysis.mc_draws must be at least 1");
        }
        if a.j2r_imputations < 2 {
            return bad("analysis.j2r_imputations must be at least 2");
        }
        if !(a.histogram_interval > 0.0) {
            return bad("analysis.histogram_interval must be positive");
        }
        if a.methods.is_empty() {
            return bad("analysis.methods is empty");
        }
        if let Some(b) = self.benchmark.bootstrap {
            if b < 100 {
                return bad("benchmark.bootstrap must be at least 100");
            }
        }
        Ok(())
    }
}
