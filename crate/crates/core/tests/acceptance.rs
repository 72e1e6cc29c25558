//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with
//! a nonzero status if any criterion fails.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tripartite::ace::{run_battery, AceOptions, FittedPipeline, Integration, Method};
use tripartite::data::{write_dataset_to, DispositionEvidence, EventTime, SubjectRecord};
use tripartite::ice::{cumulative_incidence, derive_ice_outcome, IceCause};
use tripartite::ice_estimands::{proportion_diff, CiMethod, ProportionDiffEstimate, TestMethod};
use tripartite::inference::BootstrapOptions;
use tripartite::regression::{fit_logistic, fit_ols, sigmoid, LogisticOptions};
use tripartite::report::pct_with_ci;
use tripartite::sim::{
    draw_subject, generate_trial, oracle_truth, run_benchmark, with_stratum_effect, BenchmarkOptions,
    SimulationSpec,
};
use tripartite::{Arm, AnalysisFrame, CovariateSchema, TrialDataset};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(checks: Vec<(bool, String)>) -> Verdict {
    let pass = checks.iter().all(|c| c.0);
    let detail = checks
        .into_iter()
        .map(|(ok, msg)| if ok { msg } else { format!("FAILED {msg}") })
        .collect::<Vec<_>>()
        .join("; ");
    Verdict { pass, detail }
}

fn table1_row(cause: IceCause, x1: usize, x0: usize) -> ProportionDiffEstimate {
    proportion_diff(cause, x1, 663, x0, 449, 0.05, CiMethod::Wald, TestMethod::Fisher).unwrap()
}

fn criterion_1() -> Verdict {
    const DIFF_TOL_PP: f64 = 0.05;
    const ADMIN_CI_TOL_PP: f64 = 0.15;
    let start = Instant::now();
    let ae = table1_row(IceCause::Ae, 70, 24);
    let loe = table1_row(IceCause::Loe, 18, 11);
    let admin = table1_row(IceCause::Admin, 70, 50);
    let any = table1_row(IceCause::Any, 154, 81);
    let elapsed = start.elapsed().as_secs_f64();

    let mut checks = Vec::new();
    for (name, r, target) in [("AE", &ae, 5.2), ("LoE", &loe, 0.3), ("Admin", &admin, -0.6), ("Any", &any, 5.2)] {
        let d = 100.0 * r.diff;
        checks.push(((d - target).abs() <= DIFF_TOL_PP, format!("{name} diff {d:.3}pp vs {target}")));
    }
    for (name, r, text) in
        [("AE", &ae, "5.2 (2.1, 8.3)"), ("LoE", &loe, "0.3 (-1.6, 2.2)"), ("Any", &any, "5.2 (0.4, 10.0)")]
    {
        let got = pct_with_ci(r.diff, r.ci);
        checks.push((got == text, format!("{name} `{got}`")));
    }
    let (lo, hi) = (100.0 * admin.ci.0, 100.0 * admin.ci.1);
    checks.push((
        (lo + 4.2).abs() <= ADMIN_CI_TOL_PP && (hi - 3.2).abs() <= ADMIN_CI_TOL_PP,
        format!("Admin CI ({lo:.2}, {hi:.2})"),
    ));
    checks.push((ae.p_value <= 0.005, format!("AE p {:.4}", ae.p_value)));
    checks.push(((0.03..=0.06).contains(&any.p_value), format!("Any p {:.4}", any.p_value)));
    checks.push(((0.75..=0.95).contains(&loe.p_value), format!("LoE p {:.4}", loe.p_value)));
    checks.push(((0.70..=0.85).contains(&admin.p_value), format!("Admin p {:.4}", admin.p_value)));
    checks.push((elapsed < 1.0, format!("{elapsed:.4}s")));
    verdict(checks)
}

/// Criteria 2 and 4 share one benchmark run at n = 4000 per arm.
fn criteria_2_and_4() -> (Verdict, Verdict) {
    const SEED: u64 = 20_240_601;
    const N: usize = 4000;
    const REPS: usize = 200;
    const PLUS_PLUS_TOL: f64 = 0.04;
    const STAR_PLUS_TOL: f64 = 0.03;
    const P_TOL: f64 = 0.03;
    const GAP_LIMIT: f64 = 0.2;
    let start = Instant::now();
    let (spec, oracle) = with_stratum_effect(&SimulationSpec::hba1c_like(), -0.25, 400_000, SEED).unwrap();
    let opts = BenchmarkOptions {
        reps: REPS,
        n_grid: vec![N],
        methods: vec![Method::AceStarPlus, Method::AcePlusPlus, Method::Mar],
        ace: AceOptions { integration: Integration::MonteCarlo { draws: 200 }, ..AceOptions::default() },
        bootstrap: None,
    };
    let report = run_benchmark(&spec, &oracle, &opts, SEED).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pp = report.row(N, "ace_s_plus_plus").unwrap();
    let sp = report.row(N, "ace_s_star_plus").unwrap();
    let p = report.row(N, "p_plus_plus").unwrap();
    let c2 = verdict(vec![
        (
            (pp.mean_estimate - oracle.plus_plus.value).abs() <= PLUS_PLUS_TOL,
            format!("S++ mean {:.4} vs oracle {:.4}", pp.mean_estimate, oracle.plus_plus.value),
        ),
        (
            (sp.mean_estimate - oracle.star_plus.value).abs() <= STAR_PLUS_TOL,
            format!("S*+ mean {:.4} vs oracle {:.4}", sp.mean_estimate, oracle.star_plus.value),
        ),
        (
            (p.mean_estimate - oracle.p_plus_plus.value).abs() <= P_TOL,
            format!("p++ mean {:.4} vs oracle {:.4}", p.mean_estimate, oracle.p_plus_plus.value),
        ),
        (pp.successes == REPS, format!("{} of {REPS} reps succeeded", pp.successes)),
        (elapsed < 600.0, format!("{elapsed:.1}s")),
    ]);
    let gap = &report.gaps[0];
    let c4 = verdict(vec![(
        gap.mean_abs_gap < GAP_LIMIT,
        format!("mean |MAR - S++| {:.4} (max {:.4}) over {} reps", gap.mean_abs_gap, gap.max_abs_gap, gap.reps),
    )]);
    (c2, c4)
}

fn criterion_3() -> Verdict {
    const TOL: f64 = 1e-10;
    let schema = CovariateSchema::new(vec![], vec![], 52.0).unwrap();
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let subjects: Vec<SubjectRecord> = (0..240)
        .map(|i| {
            let arm = if i % 2 == 0 { Arm::Reference } else { Arm::Experimental };
            let shift = if arm == Arm::Experimental { -0.7 } else { 0.0 };
            SubjectRecord {
                id: format!("S{i:03}"),
                arm,
                x: vec![],
                z: vec![],
                y: Some(shift + r.sample::<f64, _>(StandardNormal)),
                d_ae: EventTime::Never,
                d_loe: EventTime::Never,
                d_admin: EventTime::Never,
                evidence: DispositionEvidence::completed(),
            }
        })
        .collect();
    let arm_mean = |arm: Arm| {
        let v: Vec<f64> = subjects.iter().filter(|s| s.arm == arm).map(|s| s.y.unwrap()).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let raw = arm_mean(Arm::Experimental) - arm_mean(Arm::Reference);
    let ds = TrialDataset::new(schema, subjects).unwrap();
    let frame = AnalysisFrame::from_dataset(&ds);
    let battery = run_battery(&frame, &Method::ALL, &AceOptions::default(), 5).unwrap();
    let checks = Method::ALL
        .iter()
        .map(|&m| {
            let d = battery.get(m).unwrap().diff;
            ((d - raw).abs() <= TOL, format!("{m} |diff - raw| {:.1e}", (d - raw).abs()))
        })
        .collect();
    verdict(checks)
}

fn criterion_5() -> Verdict {
    const SEED: u64 = 55;
    const N: usize = 150;
    const REPS: usize = 200;
    const MC_SE_MULTIPLE: f64 = 3.0;
    const COVERAGE: (f64, f64) = (0.90, 0.98);
    let spec = SimulationSpec::null_effect();
    let mut oracle = oracle_truth(&spec, 100_000, SEED).unwrap();
    // Identical arms make every stratum effect exactly zero.
    for t in [&mut oracle.star_star, &mut oracle.star_plus, &mut oracle.plus_plus] {
        t.value = 0.0;
        t.mc_se = 0.0;
    }
    let opts = BenchmarkOptions {
        reps: REPS,
        n_grid: vec![N],
        methods: Method::ALL.to_vec(),
        ace: AceOptions { integration: Integration::MonteCarlo { draws: 20 }, j2r_imputations: 5, ..AceOptions::default() },
        bootstrap: Some(BootstrapOptions { replicates: 400, alpha: 0.05 }),
    };
    let report = run_benchmark(&spec, &oracle, &opts, SEED).unwrap();
    let mut checks = Vec::new();
    for m in Method::ALL {
        let row = report.row(N, m.as_str()).unwrap();
        checks.push((
            row.mean_estimate.abs() <= MC_SE_MULTIPLE * row.mc_se,
            format!("{m} mean {:.4} (mc_se {:.4})", row.mean_estimate, row.mc_se),
        ));
        let cov = row.coverage.unwrap();
        checks.push(((COVERAGE.0..=COVERAGE.1).contains(&cov), format!("{m} coverage {cov:.3}")));
    }
    verdict(checks)
}

fn log_likelihood(x: &[f64], y: &[bool], b0: f64, b1: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let eta = b0 + b1 * xi;
            let log1p_exp = if eta > 0.0 { eta + (-eta).exp().ln_1p() } else { eta.exp().ln_1p() };
            if yi {
                eta - log1p_exp
            } else {
                -log1p_exp
            }
        })
        .sum()
}

/// Maximizes the log-likelihood by repeatedly refining a square grid.
fn grid_search_mle(x: &[f64], y: &[bool]) -> (f64, f64) {
    let (mut c0, mut c1, mut half) = (0.0, 0.0, 8.0);
    while half > 1e-8 {
        let step = half / 10.0;
        let mut best = (f64::NEG_INFINITY, c0, c1);
        for i in -10..=10 {
            for j in -10..=10 {
                let (b0, b1) = (c0 + i as f64 * step, c1 + j as f64 * step);
                let ll = log_likelihood(x, y, b0, b1);
                if ll > best.0 {
                    best = (ll, b0, b1);
                }
            }
        }
        (c0, c1) = (best.1, best.2);
        half /= 2.0;
    }
    (c0, c1)
}

fn criterion_6() -> Verdict {
    const OLS_TOL: f64 = 1e-8;
    const GRID_TOL: f64 = 1e-4;
    const SCORE_TOL: f64 = 1e-6;
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let mut ols_worst: f64 = 0.0;
    for problem in 0..20 {
        let (n, k) = (30 + 7 * problem, 1 + problem % 5);
        let x = DMatrix::from_fn(n, k, |_, _| r.sample::<f64, _>(StandardNormal));
        let y: Vec<f64> = (0..n).map(|i| 1.0 + x.row(i).sum() + r.sample::<f64, _>(StandardNormal)).collect();
        let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
        let fit = fit_ols(&x, &y, &names).unwrap();
        let design = DMatrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { x[(i, j - 1)] });
        let xtx = design.transpose() * &design;
        let xty = design.transpose() * DVector::from_column_slice(&y);
        let beta = xtx.cholesky().unwrap().solve(&xty);
        for (a, b) in fit.coefficients.iter().zip(beta.iter()) {
            ols_worst = ols_worst.max((a - b).abs());
        }
    }
    let mut grid_worst: f64 = 0.0;
    let mut score_worst: f64 = 0.0;
    for problem in 0..10 {
        let n = 150 + 25 * problem;
        let (b0, b1) = (-0.5 + 0.1 * problem as f64, 1.2 - 0.2 * problem as f64);
        let x: Vec<f64> = (0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let y: Vec<bool> = x.iter().map(|&xi| r.random::<f64>() < sigmoid(b0 + b1 * xi)).collect();
        let fit = fit_logistic(&DMatrix::from_column_slice(n, 1, &x), &y, &["x".into()], &LogisticOptions::default())
            .unwrap();
        let (g0, g1) = grid_search_mle(&x, &y);
        grid_worst = grid_worst.max((fit.coefficients[0] - g0).abs()).max((fit.coefficients[1] - g1).abs());
        let mut score = [0.0; 2];
        for (&xi, &yi) in x.iter().zip(&y) {
            let resid = f64::from(u8::from(yi)) - sigmoid(fit.coefficients[0] + fit.coefficients[1] * xi);
            score[0] += resid;
            score[1] += resid * xi;
        }
        score_worst = score_worst.max(score[0].abs()).max(score[1].abs());
    }
    verdict(vec![
        (ols_worst <= OLS_TOL, format!("OLS vs normal equations {ols_worst:.1e} over 20 problems")),
        (grid_worst <= GRID_TOL, format!("logistic vs grid MLE {grid_worst:.1e}")),
        (score_worst <= SCORE_TOL, format!("score {score_worst:.1e}")),
    ])
}

fn criterion_7() -> Verdict {
    const DATASETS: u64 = 50;
    const EQUIVARIANCE_TOL: f64 = 1e-8;
    let opts = AceOptions { integration: Integration::MonteCarlo { draws: 20 }, j2r_imputations: 5, ..AceOptions::default() };
    let (mut indicator, mut cif, mut bounds, mut equivariance, mut determinism) = (true, true, true, true, true);
    let mut skipped = 0usize;
    let mut worst_equivariance: f64 = 0.0;
    let mut r = ChaCha8Rng::seed_from_u64(7);
    for d in 0..DATASETS {
        let n = r.random_range(120..=300);
        let base = if d % 2 == 0 { SimulationSpec::hba1c_like() } else { SimulationSpec::null_effect() };
        let spec = base.with_arm_size(n);
        let seed = r.random::<u64>();
        let (ds, _) = generate_trial(&spec, seed).unwrap();
        let d_max = ds.d_max();

        for s in ds.subjects() {
            let o = derive_ice_outcome(s, d_max);
            indicator &= o.adherent == !(o.ae || o.loe || o.admin);
            indicator &= o.adherent == s.is_adherent(d_max);
        }
        for cause in IceCause::ALL {
            let curve = cumulative_incidence(&ds, cause);
            for arm in Arm::BOTH {
                let pts = curve.points(arm);
                cif &= pts.windows(2).all(|w| w[1].proportion >= w[0].proportion && w[1].time_weeks > w[0].time_weeks);
                if cause == IceCause::Any {
                    let c = ds.counts();
                    let adherence = c.adherers(arm) as f64 / c.size(arm) as f64;
                    cif &= (curve.value_at(arm, d_max) - (1.0 - adherence)).abs() < 1e-12;
                }
            }
        }

        let frame = AnalysisFrame::from_dataset(&ds);
        let battery = match run_battery(&frame, &Method::ALL, &opts, seed) {
            Ok(b) => b,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let pipeline = FittedPipeline::fit(&frame, true, &opts, seed).unwrap();
        let in_unit = |v: &f64| (0.0..=1.0).contains(v);
        bounds &= pipeline.quantities.h.iter().all(|h| h.iter().all(in_unit));
        bounds &= battery.p_plus_plus.is_some_and(|p| in_unit(&p));

        // J2R imputation noise is symmetric only in distribution, so its
        // draws are equivariant under positive scale factors alone.
        for (a, b) in [(3.5, 2.5), (-1.0, -2.0)] {
            let mapped = AnalysisFrame::from_dataset(&ds.map_outcomes(|y| a + b * y));
            let other = run_battery(&mapped, &Method::ALL, &opts, seed).unwrap();
            for e in battery.estimates.iter().filter(|e| b > 0.0 || e.method != Method::J2r) {
                let f = other.get(e.method).unwrap();
                let err = (f.mean0 - (a + b * e.mean0))
                    .abs()
                    .max((f.mean1 - (a + b * e.mean1)).abs())
                    .max((f.diff - b * e.diff).abs());
                worst_equivariance = worst_equivariance.max(err);
            }
        }

        let again = generate_trial(&spec, seed).unwrap().0;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        write_dataset_to(&ds, &mut x).unwrap();
        write_dataset_to(&again, &mut y).unwrap();
        determinism &= x == y;
        determinism &= run_battery(&frame, &Method::ALL, &opts, seed).unwrap() == battery;
    }
    equivariance &= worst_equivariance <= EQUIVARIANCE_TOL;
    verdict(vec![
        (indicator, "A/I indicator consistency".into()),
        (cif, "CIF monotone and CIF_Any(d_max) = 1 - adherence".into()),
        (bounds, "h and p++ in [0, 1]".into()),
        (equivariance, format!("location/scale equivariance, worst {worst_equivariance:.1e}")),
        (determinism, "byte-identical reruns".into()),
        (skipped == 0, format!("{} of {DATASETS} datasets analyzed", DATASETS as usize - skipped)),
    ])
}

fn criterion_8() -> Verdict {
    const SEED: u64 = 8;
    let spec = SimulationSpec::hba1c_like().with_arm_size(50_000);
    let (ds, truth) = generate_trial(&spec, SEED).unwrap();
    let mut mismatches = 0usize;
    for (j, (s, p)) in ds.subjects().iter().zip(&truth.subjects).enumerate() {
        let w = &p.worlds[s.arm.index()];
        let first = w.first_ice().unwrap_or(f64::INFINITY);
        let z_ok = spec.visits.iter().zip(&w.z).zip(&s.z).all(|((v, &zp), &zo)| {
            if v.week < first {
                zo == Some(zp)
            } else {
                zo.is_none()
            }
        });
        let ok = s.x == p.x
            && z_ok
            && s.y == w.adherent.then_some(w.y)
            && s.is_adherent(ds.d_max()) == w.adherent
            && s.d_ae == w.d_ae
            && s.d_loe == w.d_loe
            && s.d_admin == w.d_admin;
        // A subject's potential values do not depend on anyone's assignment.
        let no_interference = j % 997 != 0 || draw_subject(&spec, SEED, j as u64) == *p;
        if !(ok && no_interference) {
            mismatches += 1;
        }
    }
    verdict(vec![
        (ds.len() == 100_000, format!("{} subjects", ds.len())),
        (mismatches == 0, format!("{mismatches} mismatches")),
    ])
}

fn main() {
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |n: usize, name: &'static str, v: Verdict| {
        println!("criterion {n} [{name}]: {} ({})", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };
    record(1, "ICE proportion table", criterion_1());
    record(3, "no-ICE collapse", criterion_3());
    record(6, "regression oracles", criterion_6());
    record(7, "structural invariants", criterion_7());
    record(8, "assumption construction", criterion_8());
    let (c2, c4) = criteria_2_and_4();
    record(2, "oracle equivalence", c2);
    record(4, "estimand gap", c4);
    record(5, "null calibration", criterion_5());
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", results.len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
