//! Command-line interface: `tripartite <subcommand> --config <path> [--seed N] [--out DIR]`.
//!
//! Exit codes: 0 on success, 1 on data or estimation errors, 2 on usage
//! errors (unknown flags, bad or incomplete configuration).

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::data::{
    baseline_balance_table, load_dataset, validate_dataset, write_dataset, Arm, BalanceSummary, BalanceTable,
    Grouping, TrialDataset,
};
use crate::frame::AnalysisFrame;
use crate::ice::{cumulative_incidence, loe_timing_histogram, reclassify_dataset, CifCurve, IceCause, LoeHistogram};
use crate::ice_estimands::{ice_summary_table, IceSummary};
use crate::inference::bootstrap_battery;
use crate::report::{self, battery_table, exposure_table, fixed, ice_table, EstimateOutput, Table};
use crate::sim::{generate_trial, oracle_truth, run_benchmark, with_stratum_effect, BenchmarkOptions, BenchmarkReport};

#[derive(Debug, Parser)]
#[command(name = "tripartite", version, about = "Tripartite estimands for two-arm randomized trials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a dataset against the structural rules.
    Validate(Common),
    /// Re-derive ICE causes from disposition evidence.
    Classify(Common),
    /// First-ICE proportion differences, incidence curves and balance tables.
    IceSummary(Common),
    /// Run the estimator battery with bootstrap intervals.
    Estimate(Common),
    /// Generate a synthetic trial and its oracle truths.
    Simulate(Common),
    /// Bias, spread and coverage of the estimators over repeated simulations.
    Benchmark(Common),
    /// Render the tripartite report from persisted results.
    Report(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
}

type Outcome = Result<(), Failure>;

fn data_err(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

struct Context {
    cfg: RunConfig,
    seed: Option<u64>,
    out: PathBuf,
}

impl Context {
    fn seed(&self) -> Result<u64, Failure> {
        self.seed.ok_or_else(|| Failure::Usage("a seed is required: set `seed` in the config or pass --seed".into()))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Outcome {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| Failure::Data(format!("cannot write `{}`: {e}", path.display())))
    }

    fn write_table(&self, stem: &str, table: &Table) -> Outcome {
        self.write(&format!("{stem}.txt"), &table.to_aligned())?;
        self.write(&format!("{stem}.csv"), &table.to_csv())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Outcome {
        let mut s = serde_json::to_string_pretty(value).map_err(data_err)?;
        s.push('\n');
        self.write(name, &s)
    }

    fn read_json<T: for<'de> Deserialize<'de>>(&self, name: &str) -> Result<T, Failure> {
        let path = self.path(name);
        let text = fs::read_to_string(&path)
            .map_err(|e| Failure::Data(format!("missing result `{}`: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::Data(format!("cannot parse `{}`: {e}", path.display())))
    }

    fn dataset(&self) -> Result<TrialDataset, Failure> {
        let data = self.cfg.data.as_ref().ok_or_else(|| Failure::Usage("config has no [data] section".into()))?;
        let schema = self.cfg.schema.as_ref().ok_or_else(|| Failure::Usage("config has no [schema] section".into()))?;
        load_dataset(&data.path, schema).map_err(data_err)
    }

    /// The dataset, reclassified from disposition evidence when configured.
    fn analysis_dataset(&self) -> Result<TrialDataset, Failure> {
        let ds = self.dataset()?;
        if self.cfg.analysis.reclassify {
            Ok(reclassify_dataset(&ds, &self.cfg.analysis.reclassify_options()).map_err(data_err)?.0)
        } else {
            Ok(ds)
        }
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (common, command): (&Common, fn(&Context) -> Outcome) = match &cli.command {
        Command::Validate(c) => (c, validate),
        Command::Classify(c) => (c, classify),
        Command::IceSummary(c) => (c, ice_summary),
        Command::Estimate(c) => (c, estimate),
        Command::Simulate(c) => (c, simulate),
        Command::Benchmark(c) => (c, benchmark),
        Command::Report(c) => (c, render_report),
    };
    let result = setup(common).and_then(|ctx| command(&ctx));
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Data(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}

fn setup(common: &Common) -> Result<Context, Failure> {
    let cfg = RunConfig::load(&common.config).map_err(|e| Failure::Usage(e.to_string()))?;
    let out = common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Failure::Usage("an output directory is required: set `out` or pass --out".into()))?;
    fs::create_dir_all(&out).map_err(|e| Failure::Data(format!("cannot create `{}`: {e}", out.display())))?;
    Ok(Context { seed: common.seed.or(cfg.seed), cfg, out })
}

fn validate(ctx: &Context) -> Outcome {
    let ds = ctx.dataset()?;
    let report = validate_dataset(&ds);
    let mut t = Table::new(&["subject_id", "rule"]);
    for v in &report.violations {
        t.push(vec![v.subject_id.clone(), v.rule.name().to_string()]);
    }
    ctx.write_table("violations", &t)?;
    if report.is_clean() {
        println!("{} subjects, no violations", ds.len());
        Ok(())
    } else {
        print!("{}", t.to_aligned());
        Err(Failure::Data(format!("{} rule violations", report.violations.len())))
    }
}

fn classify(ctx: &Context) -> Outcome {
    let ds = ctx.dataset()?;
    let (reclassified, classes) = reclassify_dataset(&ds, &ctx.cfg.analysis.reclassify_options()).map_err(data_err)?;
    let mut t = Table::new(&["subject_id", "recorded_reason", "week", "causes"]);
    for c in &classes {
        t.push(vec![c.id.clone(), c.recorded_reason.to_string(), c.discontinuation_week.to_string(), c.causes.label()]);
    }
    ctx.write_table("classifications", &t)?;
    write_dataset(&reclassified, ctx.path("reclassified.csv")).map_err(data_err)?;
    print!("{}", t.to_aligned());
    Ok(())
}

/// Persisted output of `ice-summary`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IceOutput {
    pub summary: IceSummary,
    pub cif: Vec<CifCurve>,
    pub loe_histogram: LoeHistogram,
}

fn cif_table(curves: &[CifCurve]) -> Table {
    let mut t = Table::new(&["cause", "arm", "time_weeks", "value"]);
    for c in curves {
        for arm in Arm::BOTH {
            for p in c.points(arm) {
                t.push(vec![c.cause.as_str().into(), arm.to_string(), p.time_weeks.to_string(), p.proportion.to_string()]);
            }
        }
    }
    t
}

fn histogram_table(h: &LoeHistogram) -> Table {
    let mut t = Table::new(&["arm", "start_week", "end_week", "count"]);
    for arm in Arm::BOTH {
        for (b, (start, end)) in h.buckets.iter().enumerate() {
            t.push(vec![arm.to_string(), start.to_string(), end.to_string(), h.counts[arm.index()][b].to_string()]);
        }
    }
    t
}

fn balance_to_table(b: &BalanceTable) -> Table {
    let [g0, g1] = b.grouping.labels();
    let mut t = Table::new(&["covariate", g0, g1, "test", "p-value"]);
    for r in &b.rows {
        match &r.summary {
            BalanceSummary::Continuous { mean, sd } => t.push(vec![
                r.covariate.clone(),
                format!("{} ({})", fixed(mean[0], 2), fixed(sd[0], 2)),
                format!("{} ({})", fixed(mean[1], 2), fixed(sd[1], 2)),
                r.test.clone(),
                format!("{:.3}", r.p_value),
            ]),
            BalanceSummary::Categorical { levels, counts } => {
                for (i, (level, c)) in levels.iter().zip(counts).enumerate() {
                    let (test, p) = if i == 0 { (r.test.clone(), format!("{:.3}", r.p_value)) } else { (String::new(), String::new()) };
                    t.push(vec![format!("{}={level}", r.covariate), c[0].to_string(), c[1].to_string(), test, p]);
                }
            }
        }
    }
    t
}

fn ice_summary(ctx: &Context) -> Outcome {
    let a = &ctx.cfg.analysis;
    let ds = ctx.analysis_dataset()?;
    let summary = ice_summary_table(&ds, a.alpha, a.ci_method, a.test_method).map_err(data_err)?;
    let cif: Vec<CifCurve> = IceCause::ALL.into_iter().map(|c| cumulative_incidence(&ds, c)).collect();
    let loe_histogram = loe_timing_histogram(&ds, a.histogram_interval).map_err(data_err)?;
    ctx.write_table("ice_summary", &ice_table(&summary))?;
    ctx.write_table("exposure", &exposure_table(&summary))?;
    ctx.write("cif.csv", &cif_table(&cif).to_csv())?;
    ctx.write("loe_histogram.csv", &histogram_table(&loe_histogram).to_csv())?;
    for (grouping, stem) in
        [(Grouping::AdherersVsNonadherers, "balance_adherence"), (Grouping::ArmWithinAdherers, "balance_arm")]
    {
        match baseline_balance_table(&ds, grouping) {
            Ok(b) => ctx.write_table(stem, &balance_to_table(&b))?,
            Err(e) => eprintln!("note: {stem} skipped: {e}"),
        }
    }
    print!("{}", ice_table(&summary).to_aligned());
    ctx.write_json("ice_summary.json", &IceOutput { summary, cif, loe_histogram })
}

fn estimate(ctx: &Context) -> Outcome {
    let seed = ctx.seed()?;
    let a = &ctx.cfg.analysis;
    let ds = ctx.analysis_dataset()?;
    let frame = AnalysisFrame::from_dataset(&ds);
    let run = bootstrap_battery(&frame, &a.methods, &a.ace_options(), &a.bootstrap_options(), seed).map_err(data_err)?;
    let out = EstimateOutput {
        seed,
        alpha: a.alpha,
        counts: ds.counts(),
        estimates: run.point.estimates.clone(),
        p_plus_plus: run.point.p_plus_plus,
        bootstrap_replicates: a.bootstrap,
        bootstrap_failures: run.failures,
    };
    let table = battery_table(&out);
    ctx.write_table("estimates", &table)?;
    if a.dump_replicates {
        let mut t = Table::new(&["method", "replicate", "diff"]);
        for r in &run.results {
            for (i, v) in r.replicates.iter().enumerate() {
                t.push(vec![r.method.to_string(), (i + 1).to_string(), v.to_string()]);
            }
        }
        ctx.write("replicates.csv", &t.to_csv())?;
    }
    print!("{}", table.to_aligned());
    if let Some(p) = out.p_plus_plus {
        println!("p++ = {}", fixed(p, 4));
    }
    ctx.write_json("estimates.json", &out)
}

fn simulation_spec(ctx: &Context, seed: u64) -> Result<crate::sim::SimulationSpec, Failure> {
    let section =
        ctx.cfg.simulation.as_ref().ok_or_else(|| Failure::Usage("config has no [simulation] section".into()))?;
    let spec = section.base_spec().map_err(|e| Failure::Usage(e.to_string()))?;
    match section.stratum_effect {
        Some(target) => Ok(with_stratum_effect(&spec, target, section.oracle_draws, seed).map_err(data_err)?.0),
        None => Ok(spec),
    }
}

fn simulate(ctx: &Context) -> Outcome {
    let seed = ctx.seed()?;
    let draws = ctx.cfg.simulation.as_ref().map_or(200_000, |s| s.oracle_draws);
    let spec = simulation_spec(ctx, seed)?;
    let (ds, truth) = generate_trial(&spec, seed).map_err(data_err)?;
    write_dataset(&ds, ctx.path("simulated.csv")).map_err(data_err)?;
    let schema = toml::to_string(ds.schema()).map_err(data_err)?;
    ctx.write("schema.toml", &schema)?;
    let mut t = Table::new(&["id", "arm", "y0", "y1", "a0", "a1"]);
    for (s, p) in ds.subjects().iter().zip(&truth.subjects) {
        t.push(vec![
            s.id.clone(),
            s.arm.to_string(),
            p.worlds[0].y.to_string(),
            p.worlds[1].y.to_string(),
            u8::from(p.worlds[0].adherent).to_string(),
            u8::from(p.worlds[1].adherent).to_string(),
        ]);
    }
    ctx.write("potential_outcomes.csv", &t.to_csv())?;
    ctx.write_json("sample_effects.json", &truth.effects)?;
    let oracle = oracle_truth(&spec, draws, seed).map_err(data_err)?;
    ctx.write_json("oracle.json", &oracle)?;
    ctx.write("spec.toml", &toml::to_string(&spec).map_err(data_err)?)?;
    println!(
        "{} subjects written; oracle S++ effect {} (p++ {})",
        ds.len(),
        fixed(oracle.plus_plus.value, 4),
        fixed(oracle.p_plus_plus.value, 4)
    );
    Ok(())
}

fn benchmark_table(r: &BenchmarkReport) -> Table {
    let mut t =
        Table::new(&["n_per_arm", "estimator", "target", "truth", "mean", "bias", "sd", "mc_se", "coverage", "failures"]);
    for row in &r.rows {
        t.push(vec![
            row.n_per_arm.to_string(),
            row.estimator.clone(),
            row.target.clone(),
            fixed(row.truth, 4),
            fixed(row.mean_estimate, 4),
            fixed(row.bias, 4),
            fixed(row.sd, 4),
            fixed(row.mc_se, 4),
            row.coverage.map_or("-".into(), |c| fixed(c, 3)),
            row.failures.to_string(),
        ]);
    }
    t
}

fn benchmark(ctx: &Context) -> Outcome {
    let seed = ctx.seed()?;
    let draws = ctx.cfg.simulation.as_ref().map_or(200_000, |s| s.oracle_draws);
    let spec = simulation_spec(ctx, seed)?;
    let oracle = oracle_truth(&spec, draws, seed).map_err(data_err)?;
    let b = &ctx.cfg.benchmark;
    let opts = BenchmarkOptions {
        reps: b.reps,
        n_grid: b.n_grid.clone(),
        methods: b.methods.clone(),
        ace: ctx.cfg.analysis.ace_options(),
        bootstrap: b.bootstrap.map(|replicates| crate::inference::BootstrapOptions {
            replicates,
            alpha: ctx.cfg.analysis.alpha,
        }),
    };
    let report = run_benchmark(&spec, &oracle, &opts, seed).map_err(|e| Failure::Usage(e.to_string()))?;
    let table = benchmark_table(&report);
    ctx.write_table("benchmark", &table)?;
    let mut gaps = Table::new(&["n_per_arm", "mean_abs_gap", "max_abs_gap", "reps"]);
    for g in &report.gaps {
        gaps.push(vec![g.n_per_arm.to_string(), fixed(g.mean_abs_gap, 4), fixed(g.max_abs_gap, 4), g.reps.to_string()]);
    }
    ctx.write_table("estimand_gap", &gaps)?;
    print!("{}", table.to_aligned());
    ctx.write_json("benchmark.json", &report)
}

fn render_report(ctx: &Context) -> Outcome {
    let ice: IceOutput = ctx.read_json("ice_summary.json")?;
    let est: EstimateOutput = ctx.read_json("estimates.json")?;
    let (text, csv) = report::render_tripartite_report(&ice.summary, &est).map_err(data_err)?;
    ctx.write("report.txt", &text)?;
    ctx.write("report.csv", &csv)?;
    ctx.write("report_cif.csv", &cif_table(&ice.cif).to_csv())?;
    ctx.write("report_loe_histogram.csv", &histogram_table(&ice.loe_histogram).to_csv())?;
    print!("{text}");
    Ok(())
}
