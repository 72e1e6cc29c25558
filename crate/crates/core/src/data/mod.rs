//! Subject-level data model, delimited-file ingestion and structural validation.

mod balance;
mod io;
mod record;
mod schema;
mod validate;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use balance::{baseline_balance_table, BalanceRow, BalanceSummary, BalanceTable, Grouping};
pub use io::{load_dataset, read_dataset, write_dataset, write_dataset_to};
pub use record::{Arm, DispositionEvidence, DispositionReason, EventTime, SubjectRecord};
pub use schema::{Covariate, CovariateKind, CovariateSchema, CovariateValue, Visit};
pub use validate::{validate_dataset, Rule, ValidationReport, Violation};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("delimited file error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header does not match schema: expected {expected:?}, found {found:?}")]
    Header { expected: Vec<String>, found: Vec<String> },
    #[error("row {row}, column `{column}`: {message}")]
    Malformed { row: usize, column: String, message: String },
    #[error("row {row}: unknown level `{value}` for categorical covariate `{column}`")]
    UnknownLevel { row: usize, column: String, value: String },
    #[error("duplicate subject id `{0}`")]
    DuplicateId(String),
    #[error("arm {0} has no subjects")]
    EmptyArm(Arm),
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("group `{0}` is empty")]
    EmptyGroup(String),
}

/// Arm sizes and adherer counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmCounts {
    /// Arm-1 size.
    pub n1: usize,
    /// Arm-0 size.
    pub n0: usize,
    /// Arm-1 adherers.
    pub n11: usize,
    /// Arm-0 adherers.
    pub n01: usize,
}

impl ArmCounts {
    pub fn size(&self, arm: Arm) -> usize {
        match arm {
            Arm::Reference => self.n0,
            Arm::Experimental => self.n1,
        }
    }

    pub fn adherers(&self, arm: Arm) -> usize {
        match arm {
            Arm::Reference => self.n01,
            Arm::Experimental => self.n11,
        }
    }

    pub fn total(&self) -> usize {
        self.n0 + self.n1
    }
}

/// A validated collection of subjects sharing one schema.
///
/// Construction enforces unique ids and two nonempty arms; the remaining
/// record-level invariants are reported by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    schema: CovariateSchema,
    subjects: Vec<SubjectRecord>,
    counts: ArmCounts,
}

impl TrialDataset {
    pub fn new(schema: CovariateSchema, subjects: Vec<SubjectRecord>) -> Result<Self, DataError> {
        let mut ids = HashSet::with_capacity(subjects.len());
        for s in &subjects {
            if !ids.insert(s.id.as_str()) {
                return Err(DataError::DuplicateId(s.id.clone()));
            }
        }
        let d_max = schema.d_max();
        let mut counts = ArmCounts { n1: 0, n0: 0, n11: 0, n01: 0 };
        for s in &subjects {
            let adherent = s.is_adherent(d_max);
            match s.arm {
                Arm::Experimental => {
                    counts.n1 += 1;
                    counts.n11 += adherent as usize;
                }
                Arm::Reference => {
                    counts.n0 += 1;
                    counts.n01 += adherent as usize;
                }
            }
        }
        for arm in Arm::BOTH {
            if counts.size(arm) == 0 {
                return Err(DataError::EmptyArm(arm));
            }
        }
        Ok(TrialDataset { schema, subjects, counts })
    }

    pub fn schema(&self) -> &CovariateSchema {
        &self.schema
    }

    pub fn subjects(&self) -> &[SubjectRecord] {
        &self.subjects
    }

    pub fn counts(&self) -> ArmCounts {
        self.counts
    }

    pub fn d_max(&self) -> f64 {
        self.schema.d_max()
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn into_parts(self) -> (CovariateSchema, Vec<SubjectRecord>) {
        (self.schema, self.subjects)
    }

    /// Copy with every observed final outcome mapped through `f`.
    pub fn map_outcomes(&self, f: impl Fn(f64) -> f64) -> TrialDataset {
        let subjects = self
            .subjects
            .iter()
            .map(|s| SubjectRecord { y: s.y.map(&f), ..s.clone() })
            .collect();
        TrialDataset { schema: self.schema.clone(), subjects, counts: self.counts }
    }
}
