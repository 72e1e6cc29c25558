//! Treatment differences in first-ICE proportions (Estimands 1 and 2) and
//! the per-cause summary table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Arm, TrialDataset};
use crate::ice::{derive_ice_outcome, IceCause};
use crate::stats;

#[derive(Debug, Error, PartialEq)]
pub enum EstimandError {
    #[error("arm {0} has no subjects")]
    EmptyArm(Arm),
    #[error("confidence level alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("event count {x} exceeds arm size {n}")]
    CountExceedsSize { x: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Wald,
    /// Newcombe hybrid score interval built from two Wilson intervals.
    Newcombe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Fisher,
    /// Pooled-variance z test without continuity correction.
    ChiSquare,
}

impl FromStr for CiMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "wald" => Ok(CiMethod::Wald),
            "newcombe" => Ok(CiMethod::Newcombe),
            _ => Err(format!("unknown CI method `{s}`")),
        }
    }
}

impl FromStr for TestMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fisher" => Ok(TestMethod::Fisher),
            "chi_square" | "chi-square" => Ok(TestMethod::ChiSquare),
            _ => Err(format!("unknown test method `{s}`")),
        }
    }
}

impl fmt::Display for CiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CiMethod::Wald => "wald",
            CiMethod::Newcombe => "newcombe",
        })
    }
}

impl fmt::Display for TestMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestMethod::Fisher => "fisher",
            TestMethod::ChiSquare => "chi_square",
        })
    }
}

/// Difference in the proportion of subjects with a first ICE of one cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionDiffEstimate {
    pub cause: IceCause,
    pub x1: usize,
    pub n1: usize,
    pub x0: usize,
    pub n0: usize,
    pub p1: f64,
    pub p0: f64,
    /// `p1 - p0`.
    pub diff: f64,
    pub ci: (f64, f64),
    pub p_value: f64,
    pub alpha: f64,
    pub ci_method: CiMethod,
    pub test_method: TestMethod,
}

/// Proportion difference from raw counts.
#[allow(clippy::too_many_arguments)]
pub fn proportion_diff(
    cause: IceCause,
    x1: usize,
    n1: usize,
    x0: usize,
    n0: usize,
    alpha: f64,
    ci_method: CiMethod,
    test_method: TestMethod,
) -> Result<ProportionDiffEstimate, EstimandError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EstimandError::InvalidAlpha(alpha));
    }
    if n1 == 0 {
        return Err(EstimandError::EmptyArm(Arm::Experimental));
    }
    if n0 == 0 {
        return Err(EstimandError::EmptyArm(Arm::Reference));
    }
    for (x, n) in [(x1, n1), (x0, n0)] {
        if x > n {
            return Err(EstimandError::CountExceedsSize { x, n });
        }
    }
    let p1 = x1 as f64 / n1 as f64;
    let p0 = x0 as f64 / n0 as f64;
    let diff = p1 - p0;
    let z = stats::normal_quantile(1.0 - alpha / 2.0);

    let ci = match ci_method {
        CiMethod::Wald => {
            let se = (p1 * (1.0 - p1) / n1 as f64 + p0 * (1.0 - p0) / n0 as f64).sqrt();
            (diff - z * se, diff + z * se)
        }
        CiMethod::Newcombe => {
            let (l1, u1) = wilson(p1, n1 as f64, z);
            let (l0, u0) = wilson(p0, n0 as f64, z);
            (
                diff - ((p1 - l1).powi(2) + (u0 - p0).powi(2)).sqrt(),
                diff + ((u1 - p1).powi(2) + (p0 - l0).powi(2)).sqrt(),
            )
        }
    };

    let p_value = match test_method {
        TestMethod::Fisher => stats::fisher_exact_two_sided(x1, n1, x0, n0),
        TestMethod::ChiSquare => {
            let pooled = (x1 + x0) as f64 / (n1 + n0) as f64;
            let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n0 as f64)).sqrt();
            if se > 0.0 {
                stats::two_sided_normal_p(diff / se)
            } else {
                1.0
            }
        }
    };

    Ok(ProportionDiffEstimate {
        cause,
        x1,
        n1,
        x0,
        n0,
        p1,
        p0,
        diff,
        ci,
        p_value,
        alpha,
        ci_method,
        test_method,
    })
}

fn wilson(p: f64, n: f64, z: f64) -> (f64, f64) {
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center - half, center + half)
}

/// Per-arm event counts `[x0, x1]` of first ICEs due to `cause`.
pub fn ice_counts(ds: &TrialDataset, cause: IceCause) -> [usize; 2] {
    let d_max = ds.d_max();
    let mut counts = [0usize; 2];
    for s in ds.subjects() {
        if cause.indicator(&derive_ice_outcome(s, d_max)) {
            counts[s.arm.index()] += 1;
        }
    }
    counts
}

/// Estimand 1 (`cause = AE`), Estimand 2 (`cause = LoE`), or the same
/// comparison for Admin/Any.
pub fn estimate_ice_diff(
    ds: &TrialDataset,
    cause: IceCause,
    alpha: f64,
    ci_method: CiMethod,
    test_method: TestMethod,
) -> Result<ProportionDiffEstimate, EstimandError> {
    let [x0, x1] = ice_counts(ds, cause);
    let c = ds.counts();
    proportion_diff(cause, x1, c.n1, x0, c.n0, alpha, ci_method, test_method)
}

/// Mean exposure among subjects whose first ICE has one cause.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureRow {
    pub cause: IceCause,
    /// Indexed by [`Arm::index`].
    pub count: [usize; 2],
    pub mean_weeks: [Option<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IceSummary {
    pub alpha: f64,
    /// Rows in the order Any, AE, LoE, Admin.
    pub rows: Vec<ProportionDiffEstimate>,
    pub exposure: Vec<ExposureRow>,
}

impl IceSummary {
    pub fn row(&self, cause: IceCause) -> Option<&ProportionDiffEstimate> {
        self.rows.iter().find(|r| r.cause == cause)
    }

    pub fn exposure(&self, cause: IceCause) -> Option<&ExposureRow> {
        self.exposure.iter().find(|r| r.cause == cause)
    }
}

/// Summary of first-ICE categories: counts, proportions, differences, CIs,
/// p-values and mean exposure per cause and arm.
pub fn ice_summary_table(
    ds: &TrialDataset,
    alpha: f64,
    ci_method: CiMethod,
    test_method: TestMethod,
) -> Result<IceSummary, EstimandError> {
    let rows = IceCause::ALL
        .into_iter()
        .map(|cause| estimate_ice_diff(ds, cause, alpha, ci_method, test_method))
        .collect::<Result<Vec<_>, _>>()?;

    let d_max = ds.d_max();
    let outcomes: Vec<_> = ds.subjects().iter().map(|s| (s.arm, derive_ice_outcome(s, d_max))).collect();
    let exposure = IceCause::ALL
        .into_iter()
        .map(|cause| {
            let mut count = [0usize; 2];
            let mut total = [0.0f64; 2];
            for (arm, o) in &outcomes {
                if cause.indicator(o) {
                    count[arm.index()] += 1;
                    total[arm.index()] += o.exposure_weeks;
                }
            }
            let mean_weeks = [0, 1].map(|a| (count[a] > 0).then(|| total[a] / count[a] as f64));
            ExposureRow { cause, count, mean_weeks }
        })
        .collect();
    Ok(IceSummary { alpha, rows, exposure })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn wald_fisher(x1: usize, n1: usize, x0: usize, n0: usize) -> ProportionDiffEstimate {
        proportion_diff(IceCause::Ae, x1, n1, x0, n0, 0.05, CiMethod::Wald, TestMethod::Fisher).unwrap()
    }

    fn round1(v: f64) -> f64 {
        (v * 1000.0).round() / 10.0
    }

    #[test]
    fn ae_row_of_reported_table() {
        let e = wald_fisher(70, 663, 24, 449);
        assert_eq!((round1(e.diff), round1(e.ci.0), round1(e.ci.1)), (5.2, 2.1, 8.3));
        assert!(e.p_value < 0.005, "{}", e.p_value);
        let chi = proportion_diff(IceCause::Ae, 70, 663, 24, 449, 0.05, CiMethod::Wald, TestMethod::ChiSquare)
            .unwrap();
        assert_abs_diff_eq!(chi.p_value, 0.002, epsilon = 0.0015);
    }

    #[test]
    fn loe_row_of_reported_table() {
        let e = wald_fisher(18, 663, 11, 449);
        assert_eq!((round1(e.diff), round1(e.ci.0), round1(e.ci.1)), (0.3, -1.6, 2.2));
    }

    #[test]
    fn empty_table() {
        let e = wald_fisher(0, 10, 0, 12);
        assert_eq!(e.diff, 0.0);
        assert_eq!(e.p_value, 1.0);
        assert_eq!(e.ci, (0.0, 0.0));
        let chi = proportion_diff(IceCause::Ae, 0, 10, 0, 12, 0.05, CiMethod::Newcombe, TestMethod::ChiSquare)
            .unwrap();
        assert_eq!(chi.p_value, 1.0);
        assert!(chi.ci.0 <= 0.0 && chi.ci.1 >= 0.0);
    }

    #[test]
    fn newcombe_matches_published_example() {
        // Newcombe (1998) example: 56/70 vs 48/80, 95% interval (0.0524, 0.3339).
        let e = proportion_diff(IceCause::Any, 56, 70, 48, 80, 0.05, CiMethod::Newcombe, TestMethod::Fisher)
            .unwrap();
        assert_abs_diff_eq!(e.ci.0, 0.0524, epsilon = 5e-4);
        assert_abs_diff_eq!(e.ci.1, 0.3339, epsilon = 5e-4);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(proportion_diff(IceCause::Ae, 0, 0, 0, 5, 0.05, CiMethod::Wald, TestMethod::Fisher).is_err());
        assert!(proportion_diff(IceCause::Ae, 0, 5, 0, 5, 1.0, CiMethod::Wald, TestMethod::Fisher).is_err());
        assert!(proportion_diff(IceCause::Ae, 6, 5, 0, 5, 0.05, CiMethod::Wald, TestMethod::Fisher).is_err());
    }

    proptest! {
        #[test]
        fn swapping_arms_mirrors_estimate(n1 in 1usize..200, n0 in 1usize..200, f1 in 0.0f64..1.0, f0 in 0.0f64..1.0) {
            let x1 = (f1 * n1 as f64) as usize;
            let x0 = (f0 * n0 as f64) as usize;
            let a = wald_fisher(x1, n1, x0, n0);
            let b = wald_fisher(x0, n0, x1, n1);
            prop_assert!((a.diff + b.diff).abs() < 1e-12);
            prop_assert!((a.ci.0 + b.ci.1).abs() < 1e-12);
            prop_assert!((a.ci.1 + b.ci.0).abs() < 1e-12);
            prop_assert!((a.p_value - b.p_value).abs() < 1e-9);
            prop_assert!(a.ci.0 <= a.diff && a.diff <= a.ci.1);
            prop_assert!((0.0..=1.0).contains(&a.p_value));
        }

        #[test]
        fn newcombe_contains_point(n1 in 1usize..200, n0 in 1usize..200, f1 in 0.0f64..1.0, f0 in 0.0f64..1.0) {
            let x1 = (f1 * n1 as f64) as usize;
            let x0 = (f0 * n0 as f64) as usize;
            let e = proportion_diff(IceCause::Ae, x1, n1, x0, n0, 0.05, CiMethod::Newcombe, TestMethod::ChiSquare).unwrap();
            prop_assert!(e.ci.0 <= e.diff + 1e-12 && e.diff <= e.ci.1 + 1e-12);
        }

        #[test]
        fn doubling_sample_narrows_wald(n1 in 2usize..300, n0 in 2usize..300, f1 in 0.05f64..0.95, f0 in 0.05f64..0.95) {
            let x1 = ((f1 * n1 as f64) as usize).max(1);
            let x0 = ((f0 * n0 as f64) as usize).max(1);
            let a = wald_fisher(x1, n1, x0, n0);
            let b = wald_fisher(2 * x1, 2 * n1, 2 * x0, 2 * n0);
            prop_assert!(b.ci.1 - b.ci.0 < a.ci.1 - a.ci.0);
        }
    }
}
