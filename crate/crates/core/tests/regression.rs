use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tripartite::regression::{fit_logistic, fit_ols, sigmoid, LogisticOptions, OutcomeChain};
use tripartite::sim::{draw_subject, generate_trial, SimulationSpec};
use tripartite::{AnalysisFrame, Arm};

fn names(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("x{j}")).collect()
}

fn normal_matrix(r: &mut ChaCha8Rng, n: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |_, _| r.sample::<f64, _>(StandardNormal))
}

#[test]
fn ols_matches_normal_equations_on_50_by_3() {
    let mut r = ChaCha8Rng::seed_from_u64(50);
    let x = normal_matrix(&mut r, 50, 3);
    let y: Vec<f64> = (0..50).map(|i| 0.5 - x[(i, 0)] + 2.0 * x[(i, 2)] + r.sample::<f64, _>(StandardNormal)).collect();
    let fit = fit_ols(&x, &y, &names(3)).unwrap();
    let design = DMatrix::from_fn(50, 4, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
    let beta = (design.transpose() * &design)
        .cholesky()
        .unwrap()
        .solve(&(design.transpose() * DVector::from_column_slice(&y)));
    for (a, b) in fit.coefficients.iter().zip(beta.iter()) {
        assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
    }
}

/// Maximizes the log-likelihood over a grid refined around the best point.
fn grid_mle(x: &[f64], y: &[bool]) -> [f64; 2] {
    let ll = |b0: f64, b1: f64| -> f64 {
        x.iter()
            .zip(y)
            .map(|(&xi, &yi)| {
                let p = sigmoid(b0 + b1 * xi);
                if yi {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                }
            })
            .sum()
    };
    let (mut c, mut half) = ([0.0, 0.0], 6.0);
    while half > 1e-8 {
        let step = half / 12.0;
        let mut best = (f64::NEG_INFINITY, c);
        for i in -12..=12 {
            for j in -12..=12 {
                let b = [c[0] + i as f64 * step, c[1] + j as f64 * step];
                let v = ll(b[0], b[1]);
                if v > best.0 {
                    best = (v, b);
                }
            }
        }
        c = best.1;
        half /= 2.0;
    }
    c
}

#[test]
fn logistic_matches_grid_search_with_40_rows() {
    let mut r = ChaCha8Rng::seed_from_u64(40);
    let x: Vec<f64> = (0..40).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
    let y: Vec<bool> = x.iter().map(|&v| r.random::<f64>() < sigmoid(0.3 + 0.8 * v)).collect();
    let fit = fit_logistic(&DMatrix::from_column_slice(40, 1, &x), &y, &names(1), &LogisticOptions::default()).unwrap();
    let grid = grid_mle(&x, &y);
    assert!((fit.coefficients[0] - grid[0]).abs() <= 1e-4 && (fit.coefficients[1] - grid[1]).abs() <= 1e-4);
}

#[test]
fn outcome_independent_of_intermediate_gets_near_zero_slope() {
    let mut spec = SimulationSpec::no_ice().with_arm_size(2000);
    let k = spec.n_regressors();
    spec.reference.y_model.coefficients[k] = 0.0;
    spec.reference.y_model.coefficients[k + 1] = 0.0;
    let (ds, _) = generate_trial(&spec, 21).unwrap();
    let chain = OutcomeChain::fit(&AnalysisFrame::from_dataset(&ds), Arm::Reference).unwrap();
    let slopes = chain.y_model.slopes();
    assert!(slopes[k].abs() <= 0.05 && slopes[k + 1].abs() <= 0.05, "{slopes:?}");
}

#[test]
fn chain_agrees_with_direct_regression_at_4000() {
    let (ds, _) = generate_trial(&SimulationSpec::no_ice().with_arm_size(4000), 22).unwrap();
    let frame = AnalysisFrame::from_dataset(&ds);
    let chain = OutcomeChain::fit(&frame, Arm::Reference).unwrap();
    let rows: Vec<_> = frame.arm_rows(Arm::Reference).collect();
    let k = frame.n_regressors();
    let x = DMatrix::from_fn(rows.len(), k, |i, j| rows[i].x[j]);
    let y: Vec<f64> = rows.iter().map(|r| r.y.unwrap()).collect();
    let direct = fit_ols(&x, &y, &frame.regressor_names).unwrap();
    let n = frame.rows.len() as f64;
    let chain_mean = frame.rows.iter().map(|r| chain.compose_phi(&r.x)).sum::<f64>() / n;
    let direct_mean = frame.rows.iter().map(|r| direct.predict(&r.x)).sum::<f64>() / n;
    assert!((chain_mean - direct_mean).abs() <= 0.02, "{chain_mean} vs {direct_mean}");
}

#[test]
fn mean_phi_approaches_true_arm_mean() {
    let spec = SimulationSpec::hba1c_like().with_arm_size(4000);
    let (ds, _) = generate_trial(&spec, 23).unwrap();
    let frame = AnalysisFrame::from_dataset(&ds);
    let chain = OutcomeChain::fit(&frame, Arm::Reference).unwrap();
    let phi = frame.rows.iter().map(|r| chain.compose_phi(&r.x)).sum::<f64>() / frame.rows.len() as f64;
    let draws = 200_000u64;
    let truth = (0..draws).map(|j| draw_subject(&spec, 999, j).worlds[0].y).sum::<f64>() / draws as f64;
    assert!((phi - truth).abs() <= 0.03, "{phi} vs {truth}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn ols_residuals_are_orthogonal(seed in any::<u64>(), n in 8usize..80, k in 1usize..4) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = normal_matrix(&mut r, n, k);
        let y: Vec<f64> = (0..n).map(|_| 10.0 * r.sample::<f64, _>(StandardNormal)).collect();
        let fit = fit_ols(&x, &y, &names(k)).unwrap();
        let resid: Vec<f64> = (0..n).map(|i| y[i] - fit.predict(&x.row(i).iter().copied().collect::<Vec<_>>())).collect();
        let scale = y.iter().map(|v| v.abs()).sum::<f64>().max(1.0);
        prop_assert!(resid.iter().sum::<f64>().abs() <= 1e-8 * scale);
        for j in 0..k {
            let dot: f64 = (0..n).map(|i| resid[i] * x[(i, j)]).sum();
            prop_assert!(dot.abs() <= 1e-8 * scale);
        }
    }

    #[test]
    fn logistic_score_vanishes(seed in any::<u64>(), n in 60usize..300, b0 in -1.0f64..1.0, b1 in -1.5f64..1.5) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = normal_matrix(&mut r, n, 2);
        let y: Vec<bool> = (0..n).map(|i| r.random::<f64>() < sigmoid(b0 + b1 * x[(i, 0)] - 0.5 * x[(i, 1)])).collect();
        let fit = fit_logistic(&x, &y, &names(2), &LogisticOptions::default()).unwrap();
        prop_assume!(fit.converged);
        let mut score = [0.0; 3];
        for i in 0..n {
            let p = fit.probability(&[x[(i, 0)], x[(i, 1)]]);
            let e = f64::from(u8::from(y[i])) - p;
            score[0] += e;
            score[1] += e * x[(i, 0)];
            score[2] += e * x[(i, 1)];
        }
        prop_assert!(score.iter().all(|s| s.abs() <= 1e-6), "{:?}", score);
    }

    #[test]
    fn composed_mean_is_affine_in_x(seed in any::<u64>(), alpha in -1.0f64..2.0) {
        let (ds, _) = generate_trial(&SimulationSpec::null_effect().with_arm_size(120), seed).unwrap();
        let frame = AnalysisFrame::from_dataset(&ds);
        let chain = OutcomeChain::fit(&frame, Arm::Experimental).unwrap();
        let (x1, x2) = (&frame.rows[0].x, &frame.rows[1].x);
        let mix: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let lhs = chain.compose_phi(&mix);
        let rhs = alpha * chain.compose_phi(x1) + (1.0 - alpha) * chain.compose_phi(x2);
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }
}
