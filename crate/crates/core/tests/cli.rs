use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use tripartite::ace::{Method, StratumEstimate};
use tripartite::cli::{run, IceOutput};
use tripartite::config::{AnalysisConfig, BenchmarkConfig, DataSection, Fixture, RunConfig, SimulationSection};
use tripartite::data::{write_dataset, DispositionEvidence, DispositionReason, EventTime, SubjectRecord};
use tripartite::ice::{IceCause, LoeHistogram};
use tripartite::ice_estimands::{proportion_diff, CiMethod, ExposureRow, IceSummary, TestMethod};
use tripartite::report::EstimateOutput;
use tripartite::sim::{generate_trial, BenchmarkReport, SimulationSpec};
use tripartite::{Arm, CovariateSchema, TrialDataset};

fn cli(command: &str, config: &Path, extra: &[&str]) -> i32 {
    let mut args = vec!["tripartite".to_string(), command.into(), "--config".into(), config.display().to_string()];
    args.extend(extra.iter().map(|s| s.to_string()));
    run(args)
}

fn write_config(dir: &Path, name: &str, cfg: &RunConfig) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, toml::to_string(cfg).unwrap()).unwrap();
    path
}

fn base_config() -> RunConfig {
    RunConfig {
        seed: None,
        out: None,
        data: None,
        schema: None,
        analysis: AnalysisConfig::default(),
        simulation: None,
        benchmark: BenchmarkConfig::default(),
    }
}

/// Simulates a trial into `dir/sim` and returns an analysis config for it.
fn simulated_analysis(dir: &Path) -> PathBuf {
    let sim = RunConfig {
        seed: Some(3),
        simulation: Some(SimulationSection {
            fixture: Some(Fixture::NullEffect),
            spec: None,
            n_per_arm: Some(80),
            stratum_effect: None,
            oracle_draws: 100_000,
        }),
        ..base_config()
    };
    let sim_path = write_config(dir, "sim.toml", &sim);
    assert_eq!(cli("simulate", &sim_path, &["--out", &dir.join("sim").display().to_string()]), 0);
    let schema: CovariateSchema = toml::from_str(&fs::read_to_string(dir.join("sim/schema.toml")).unwrap()).unwrap();
    let analysis = RunConfig {
        seed: Some(11),
        data: Some(DataSection { path: "sim/simulated.csv".into(), schema: None }),
        schema: Some(schema),
        analysis: AnalysisConfig { bootstrap: 100, mc_draws: 10, j2r_imputations: 3, ..AnalysisConfig::default() },
        ..base_config()
    };
    write_config(dir, "analysis.toml", &analysis)
}

fn run_pipeline(config: &Path, out: &Path) {
    let out = out.display().to_string();
    for command in ["validate", "classify", "ice-summary", "estimate", "report"] {
        assert_eq!(cli(command, config, &["--out", &out]), 0, "{command}");
    }
}

fn directory_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn pipeline_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulated_analysis(dir.path());
    run_pipeline(&config, &dir.path().join("a"));
    run_pipeline(&config, &dir.path().join("b"));
    let (a, b) = (directory_contents(&dir.path().join("a")), directory_contents(&dir.path().join("b")));
    for name in ["estimates.csv", "estimates.json", "ice_summary.json", "report.txt", "report.csv", "cif.csv"] {
        assert!(a.contains_key(name), "missing {name}");
    }
    assert_eq!(a, b);
}

#[test]
fn report_renders_persisted_results_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulated_analysis(dir.path());
    let out = dir.path().join("out");
    run_pipeline(&config, &out);
    let first = fs::read(out.join("report.txt")).unwrap();
    assert_eq!(cli("report", &config, &["--out", &out.display().to_string()]), 0);
    assert_eq!(fs::read(out.join("report.txt")).unwrap(), first);

    let path = out.join("estimates.json");
    let mut est: EstimateOutput = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    est.p_plus_plus = Some(0.123_456);
    fs::write(&path, serde_json::to_string(&est).unwrap()).unwrap();
    assert_eq!(cli("report", &config, &["--out", &out.display().to_string()]), 0);
    assert!(fs::read_to_string(out.join("report.txt")).unwrap().contains("(p++): 12.3%"));

    fs::remove_file(out.join("ice_summary.json")).unwrap();
    assert_eq!(cli("report", &config, &["--out", &out.display().to_string()]), 1);
}

#[test]
fn table_fixture_counts_render_the_reported_row() {
    let dir = tempfile::tempdir().unwrap();
    let row = |cause, x1, x0| proportion_diff(cause, x1, 663, x0, 449, 0.05, CiMethod::Wald, TestMethod::Fisher).unwrap();
    let summary = IceSummary {
        alpha: 0.05,
        rows: vec![
            row(IceCause::Any, 154, 81),
            row(IceCause::Ae, 70, 24),
            row(IceCause::Loe, 18, 11),
            row(IceCause::Admin, 70, 50),
        ],
        exposure: vec![ExposureRow { cause: IceCause::Ae, count: [24, 70], mean_weeks: [Some(20.1), Some(23.1)] }],
    };
    let histogram = LoeHistogram { interval_weeks: 26.0, buckets: vec![(0.0, 26.0), (26.0, 52.0)], counts: [vec![6, 5], vec![10, 8]] };
    let ice = IceOutput { summary, cif: vec![], loe_histogram: histogram };
    let estimate = |m, a: f64, b: f64| StratumEstimate { ci: Some((b - a - 0.1, b - a + 0.1)), ..StratumEstimate::new(m, a, b) };
    let est = EstimateOutput {
        seed: 1,
        alpha: 0.05,
        counts: tripartite::data::ArmCounts { n1: 663, n0: 449, n11: 509, n01: 368 },
        estimates: vec![estimate(Method::AceStarPlus, -0.2, -1.0), estimate(Method::AcePlusPlus, -0.25, -1.05)],
        p_plus_plus: Some(0.6),
        bootstrap_replicates: 1000,
        bootstrap_failures: 0,
    };
    fs::write(dir.path().join("ice_summary.json"), serde_json::to_string(&ice).unwrap()).unwrap();
    fs::write(dir.path().join("estimates.json"), serde_json::to_string(&est).unwrap()).unwrap();
    let config = write_config(dir.path(), "run.toml", &RunConfig { out: Some(".".into()), ..base_config() });
    assert_eq!(cli("report", &config, &[]), 0);
    let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let ae = text.lines().skip_while(|l| !l.contains("adverse event")).nth(2).unwrap();
    assert!(ae.contains("5.2 (2.1, 8.3)"), "{ae}");
    let ice_table = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert!(ice_table.lines().any(|l| l.starts_with("ae,diff,,0.052")));
}

#[test]
fn exit_codes_distinguish_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = simulated_analysis(dir.path());
    let out = dir.path().join("out").display().to_string();
    assert_eq!(run(["tripartite", "frobnicate"]), 2);
    assert_eq!(cli("estimate", &config, &["--out", &out, "--bogus"]), 2);
    assert_eq!(cli("estimate", &dir.path().join("missing.toml"), &["--out", &out]), 2);
    assert_eq!(run(["tripartite", "--help"]), 0);

    let mut no_seed: RunConfig = toml::from_str(&fs::read_to_string(&config).unwrap()).unwrap();
    no_seed.seed = None;
    let no_seed = write_config(dir.path(), "no_seed.toml", &no_seed);
    assert_eq!(cli("estimate", &no_seed, &["--out", &out]), 2);
    assert_eq!(cli("estimate", &no_seed, &["--out", &out, "--seed", "4"]), 0);

    fs::write(dir.path().join("bad.toml"), "seed = 1\n[analysis]\nalpha = 2.0\n").unwrap();
    assert_eq!(cli("estimate", &dir.path().join("bad.toml"), &["--out", &out]), 2);

    let schema = CovariateSchema::new(vec![], vec![], 52.0).unwrap();
    let broken = SubjectRecord {
        id: "S1".into(),
        arm: Arm::Experimental,
        x: vec![],
        z: vec![],
        y: Some(1.0),
        d_ae: EventTime::At(10.0),
        d_loe: EventTime::Never,
        d_admin: EventTime::Never,
        evidence: DispositionEvidence { recorded_reason: DispositionReason::Ae, ae_flag: true, efficacy_no_improvement_flag: false },
    };
    let fine = SubjectRecord { id: "S2".into(), arm: Arm::Reference, d_ae: EventTime::Never, evidence: DispositionEvidence::completed(), ..broken.clone() };
    let ds = TrialDataset::new(schema.clone(), vec![broken, fine]).unwrap();
    write_dataset(&ds, dir.path().join("broken.csv")).unwrap();
    let cfg = RunConfig { data: Some(DataSection { path: "broken.csv".into(), schema: None }), schema: Some(schema), ..base_config() };
    let cfg = write_config(dir.path(), "broken.toml", &cfg);
    assert_eq!(cli("validate", &cfg, &["--out", &out]), 1);
    assert!(fs::read_to_string(dir.path().join("out/violations.csv")).unwrap().contains("S1"));
}

#[test]
fn null_benchmark_has_no_detectable_bias() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        seed: Some(61),
        out: Some("bench".into()),
        analysis: AnalysisConfig { mc_draws: 20, ..AnalysisConfig::default() },
        simulation: Some(SimulationSection {
            fixture: Some(Fixture::NullEffect),
            spec: None,
            n_per_arm: None,
            stratum_effect: None,
            oracle_draws: 100_000,
        }),
        benchmark: BenchmarkConfig { reps: 60, n_grid: vec![150], ..BenchmarkConfig::default() },
        ..base_config()
    };
    let path = write_config(dir.path(), "bench.toml", &cfg);
    assert_eq!(cli("benchmark", &path, &[]), 0);
    let report: BenchmarkReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("bench/benchmark.json")).unwrap()).unwrap();
    for row in report.rows.iter().filter(|r| r.estimator != "p_plus_plus") {
        assert!(row.bias.abs() <= 3.0 * row.mc_se, "{}: bias {} mc_se {}", row.estimator, row.bias, row.mc_se);
    }
    assert!(dir.path().join("bench/benchmark.csv").exists());
}

#[test]
fn simulate_writes_a_loadable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    simulated_analysis(dir.path());
    let (expected, _) = generate_trial(&SimulationSpec::null_effect().with_arm_size(80), 3).unwrap();
    let schema: CovariateSchema = toml::from_str(&fs::read_to_string(dir.path().join("sim/schema.toml")).unwrap()).unwrap();
    let loaded = tripartite::data::load_dataset(dir.path().join("sim/simulated.csv"), &schema).unwrap();
    assert_eq!(loaded, expected);
}
