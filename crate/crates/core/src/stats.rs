//! Small statistical helpers shared across modules.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};
use statrs::function::factorial::ln_binomial;

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample variance with `n - 1` denominator; zero for fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_sd(values: &[f64]) -> f64 {
    sample_variance(values).sqrt()
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

pub fn normal_cdf(x: f64) -> f64 {
    standard_normal().cdf(x)
}

/// Two-sided p-value for a standard normal statistic.
pub fn two_sided_normal_p(z: f64) -> f64 {
    (2.0 * standard_normal().sf(z.abs())).min(1.0)
}

/// Outcome of a two-sample Welch t-test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Unequal-variance two-sample t-test.
///
/// When both standard errors vanish the test degenerates: identical means
/// give `p = 1`, different means give `p = 0`.
pub fn welch_t_test(a: &[f64], b: &[f64]) -> WelchTest {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_variance(a) / na, sample_variance(b) / nb);
    let diff = mean(a) - mean(b);
    let se2 = va + vb;
    if se2 <= 0.0 {
        let p_value = if diff == 0.0 { 1.0 } else { 0.0 };
        return WelchTest {
            statistic: if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY },
            df: f64::NAN,
            p_value,
        };
    }
    let t = diff / se2.sqrt();
    let mut denom = 0.0;
    if na > 1.0 {
        denom += va * va / (na - 1.0);
    }
    if nb > 1.0 {
        denom += vb * vb / (nb - 1.0);
    }
    let df = se2 * se2 / denom;
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p_value = (2.0 * dist.sf(t.abs())).min(1.0);
    WelchTest { statistic: t, df, p_value }
}

/// Pearson chi-square test of independence on a `levels x 2` table of counts.
///
/// Levels with a zero total are dropped. Returns `(statistic, df, p_value)`.
pub fn chi_square_independence(table: &[[usize; 2]]) -> (f64, usize, f64) {
    let rows: Vec<[f64; 2]> = table
        .iter()
        .filter(|r| r[0] + r[1] > 0)
        .map(|r| [r[0] as f64, r[1] as f64])
        .collect();
    let col = [
        rows.iter().map(|r| r[0]).sum::<f64>(),
        rows.iter().map(|r| r[1]).sum::<f64>(),
    ];
    if rows.len() < 2 || col[0] == 0.0 || col[1] == 0.0 {
        return (0.0, rows.len().saturating_sub(1), 1.0);
    }
    let total = col[0] + col[1];
    let mut stat = 0.0;
    for r in &rows {
        let row_total = r[0] + r[1];
        for c in 0..2 {
            let expected = row_total * col[c] / total;
            stat += (r[c] - expected).powi(2) / expected;
        }
    }
    let df = rows.len() - 1;
    let dist = ChiSquared::new(df as f64).expect("positive df");
    (stat, df, dist.sf(stat))
}

/// Two-sided Fisher exact test for the 2x2 table `[[x1, n1 - x1], [x0, n0 - x0]]`.
///
/// The two-sided p-value sums the probabilities of all tables with the same
/// margins whose conditional probability does not exceed the observed one.
pub fn fisher_exact_two_sided(x1: usize, n1: usize, x0: usize, n0: usize) -> f64 {
    let events = x1 + x0;
    let total = n1 + n0;
    if events == 0 || events == total {
        return 1.0;
    }
    let ln_denominator = ln_binomial(total as u64, events as u64);
    let log_prob = |k: usize| {
        ln_binomial(n1 as u64, k as u64) + ln_binomial(n0 as u64, (events - k) as u64)
            - ln_denominator
    };
    let lo = events.saturating_sub(n0);
    let hi = events.min(n1);
    let observed = log_prob(x1);
    // Relative tolerance guards against rounding in tables tied with the observed one.
    let threshold = observed + 1e-7_f64.ln_1p();
    let p: f64 = (lo..=hi)
        .map(log_prob)
        .filter(|&lp| lp <= threshold)
        .map(f64::exp)
        .sum();
    p.min(1.0)
}
