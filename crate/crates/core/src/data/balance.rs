use serde::{Deserialize, Serialize};

use super::record::Arm;
use super::schema::{CovariateKind, CovariateValue};
use super::{DataError, TrialDataset};
use crate::stats;

/// How subjects are split into the two compared groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grouping {
    /// Adherers versus subjects with an ICE before `d_max`, both arms pooled.
    AdherersVsNonadherers,
    /// Arm 0 versus arm 1 among adherers only.
    ArmWithinAdherers,
}

impl Grouping {
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            Grouping::AdherersVsNonadherers => ["adherers", "non-adherers"],
            Grouping::ArmWithinAdherers => ["arm 0 adherers", "arm 1 adherers"],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BalanceSummary {
    Continuous { mean: [f64; 2], sd: [f64; 2] },
    Categorical { levels: Vec<String>, counts: Vec<[usize; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub covariate: String,
    pub summary: BalanceSummary,
    /// `welch-t` or `chi-square`.
    pub test: String,
    /// Descriptive only; no multiplicity adjustment.
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceTable {
    pub grouping: Grouping,
    pub group_sizes: [usize; 2],
    pub rows: Vec<BalanceRow>,
}

/// Baseline characteristics of two groups with descriptive p-values
/// (unequal-variance t-test for continuous, chi-square for categorical).
pub fn baseline_balance_table(ds: &TrialDataset, grouping: Grouping) -> Result<BalanceTable, DataError> {
    let d_max = ds.d_max();
    let group_of = |s: &super::SubjectRecord| -> Option<usize> {
        let adherent = s.is_adherent(d_max);
        match grouping {
            Grouping::AdherersVsNonadherers => Some(if adherent { 0 } else { 1 }),
            Grouping::ArmWithinAdherers => adherent.then_some(match s.arm {
                Arm::Reference => 0,
                Arm::Experimental => 1,
            }),
        }
    };
    let membership: Vec<Option<usize>> = ds.subjects().iter().map(group_of).collect();
    let mut group_sizes = [0usize; 2];
    for g in membership.iter().flatten() {
        group_sizes[*g] += 1;
    }
    for g in 0..2 {
        if group_sizes[g] == 0 {
            return Err(DataError::EmptyGroup(grouping.labels()[g].to_string()));
        }
    }

    let mut rows = Vec::new();
    for (ci, cov) in ds.schema().covariates().iter().enumerate() {
        let row = match &cov.kind {
            CovariateKind::Continuous => {
                let mut values: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
                for (s, g) in ds.subjects().iter().zip(&membership) {
                    if let (Some(g), CovariateValue::Continuous(v)) = (g, s.x[ci]) {
                        values[*g].push(v);
                    }
                }
                let test = stats::welch_t_test(&values[0], &values[1]);
                BalanceRow {
                    covariate: cov.name.clone(),
                    summary: BalanceSummary::Continuous {
                        mean: [stats::mean(&values[0]), stats::mean(&values[1])],
                        sd: [stats::sample_sd(&values[0]), stats::sample_sd(&values[1])],
                    },
                    test: "welch-t".into(),
                    p_value: test.p_value,
                }
            }
            CovariateKind::Categorical { levels } => {
                let mut counts = vec![[0usize; 2]; levels.len()];
                for (s, g) in ds.subjects().iter().zip(&membership) {
                    if let (Some(g), CovariateValue::Level(l)) = (g, s.x[ci]) {
                        if l < levels.len() {
                            counts[l][*g] += 1;
                        }
                    }
                }
                let (_, _, p_value) = stats::chi_square_independence(&counts);
                BalanceRow {
                    covariate: cov.name.clone(),
                    summary: BalanceSummary::Categorical { levels: levels.clone(), counts },
                    test: "chi-square".into(),
                    p_value,
                }
            }
        };
        rows.push(row);
    }
    Ok(BalanceTable { grouping, group_sizes, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        Covariate, CovariateSchema, DispositionEvidence, DispositionReason, EventTime, SubjectRecord,
    };

    fn subject(i: usize, arm: Arm, age: f64, sex: usize, adherent: bool) -> SubjectRecord {
        SubjectRecord {
            id: format!("s{i}"),
            arm,
            x: vec![CovariateValue::Continuous(age), CovariateValue::Level(sex)],
            z: vec![],
            y: adherent.then_some(7.0),
            d_ae: EventTime::Never,
            d_loe: EventTime::Never,
            d_admin: if adherent { EventTime::Never } else { EventTime::At(20.0) },
            evidence: if adherent {
                DispositionEvidence::completed()
            } else {
                DispositionEvidence {
                    recorded_reason: DispositionReason::WithdrawalBySubject,
                    ae_flag: false,
                    efficacy_no_improvement_flag: false,
                }
            },
        }
    }

    fn schema() -> CovariateSchema {
        CovariateSchema::new(
            vec![Covariate::continuous("age"), Covariate::categorical("sex", &["F", "M"])],
            vec![],
            52.0,
        )
        .unwrap()
    }

    #[test]
    fn identical_groups_give_unit_p() {
        let subjects = (0..20)
            .map(|i| subject(i, if i % 2 == 0 { Arm::Reference } else { Arm::Experimental }, 45.0, i % 2, i < 10))
            .collect();
        let ds = TrialDataset::new(schema(), subjects).unwrap();
        let t = baseline_balance_table(&ds, Grouping::AdherersVsNonadherers).unwrap();
        assert!((t.rows[0].p_value - 1.0).abs() < 1e-9);
        assert_eq!(t.group_sizes, [10, 10]);
    }

    #[test]
    fn separated_groups_are_significant() {
        let subjects = (0..60)
            .map(|i| {
                let adherent = i < 30;
                let jitter = (i % 3) as f64 - 1.0;
                let age = if adherent { 40.0 } else { 50.0 } + jitter;
                subject(i, if i % 2 == 0 { Arm::Reference } else { Arm::Experimental }, age, 0, adherent)
            })
            .collect();
        let ds = TrialDataset::new(schema(), subjects).unwrap();
        let t = baseline_balance_table(&ds, Grouping::AdherersVsNonadherers).unwrap();
        assert!(t.rows[0].p_value < 0.001);
        assert_eq!(t.rows[1].test, "chi-square");
    }

    #[test]
    fn empty_group_is_an_error() {
        let subjects = (0..4)
            .map(|i| subject(i, if i % 2 == 0 { Arm::Reference } else { Arm::Experimental }, 40.0, 0, true))
            .collect();
        let ds = TrialDataset::new(schema(), subjects).unwrap();
        assert!(matches!(
            baseline_balance_table(&ds, Grouping::AdherersVsNonadherers),
            Err(DataError::EmptyGroup(_))
        ));
        assert!(baseline_balance_table(&ds, Grouping::ArmWithinAdherers).is_ok());
    }
}
