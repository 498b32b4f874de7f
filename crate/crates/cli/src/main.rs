use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cifscore::baselines::{auc_average, brier_average, cindex_from_predictions, event_time_quantile, QuantileGrid};
use cifscore::bootstrap::{bootstrap_ci, BootstrapInterval, MIN_RESAMPLES};
use cifscore::io::{format_f64, read_dataset, read_predictions, write_long, write_predictions, write_records};
use cifscore::population::provider_curves;
use cifscore::replicate::{run_experiment, Experiment, ReplicateConfig, DISTORTED_SIGMA};
use cifscore::simulator::{cif_provider, default_time_grid, simulate, ProviderVariant, SimScenario, SimulatedData};
use cifscore::{pseudo_r2, Dataset, PredictionSet, Variant};

#[derive(Parser)]
#[command(name = "cifscore", version, about = "Pseudo R² and baseline metrics for competing-risks predictions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score predicted CIF curves against a dataset.
    Evaluate(EvaluateArgs),
    /// Generate a Weibull competing-risks dataset.
    Simulate(SimulateArgs),
    /// Run a simulation study and write a long-format table.
    Replicate(ReplicateArgs),
    /// Percentile bootstrap interval for pseudo R².
    Bootstrap(BootstrapArgs),
}

#[derive(Args)]
struct Jobs {
    /// Worker threads (falls back to CIF_EVAL_JOBS, then all cores).
    #[arg(long, env = "CIF_EVAL_JOBS")]
    jobs: Option<usize>,
}

#[derive(Args)]
struct Inputs {
    /// Dataset CSV with header id,time,event[,x1,...].
    #[arg(long)]
    data: PathBuf,
    /// Predictions CSV with header id,time,cif.
    #[arg(long)]
    pred: PathBuf,
    /// Absolute evaluation horizon.
    #[arg(long, conflicts_with = "tau_quantile", required_unless_present = "tau_quantile")]
    tau: Option<f64>,
    /// Horizon as a quantile of the observed event times (lower rule).
    #[arg(long)]
    tau_quantile: Option<f64>,
    /// Cause of interest.
    #[arg(long, default_value_t = 1)]
    cause: u32,
    /// Number of competing causes in the dataset.
    #[arg(long, default_value_t = 2)]
    causes: u32,
    #[arg(long, value_enum, default_value_t = VariantArg::Horizon)]
    variant: VariantArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Horizon,
    Point,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Horizon => Variant::Horizon,
            VariantArg::Point => Variant::Point,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    PseudoR2,
    Brier,
    Auc,
    Cindex,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Comma-separated metrics; pseudo R² is always reported.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "pseudo-r2")]
    metrics: Vec<Metric>,
    /// Time points of the Brier / AUC quantile grid.
    #[arg(long, default_value_t = cifscore::baselines::DEFAULT_GRID_COUNT)]
    grid_count: usize,
    /// Add a bootstrap interval with this many resamples.
    #[arg(long)]
    boot: Option<usize>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    jobs: Jobs,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Full,
    Reduced,
    Sigma5,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML scenario file; keys are the SimScenario fields.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    censor_rate: Option<f64>,
    /// Dataset CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the true CIF of cause 1 per subject.
    #[arg(long, requires = "pred")]
    emit_true_cif: bool,
    /// Predictions CSV path for --emit-true-cif.
    #[arg(long)]
    pred: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ProviderArg::Full)]
    provider: ProviderArg,
    /// Knots per true-CIF curve.
    #[arg(long, default_value_t = 200)]
    curve_points: usize,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Args)]
struct ReplicateArgs {
    /// fig1, fig2, fig5 or supp.
    #[arg(long)]
    experiment: Experiment,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Size of each population test sample.
    #[arg(long, default_value_t = 5000)]
    n_test: usize,
    /// Monte Carlo size of the nonparametric benchmark; 0 skips it.
    #[arg(long, default_value_t = 200_000)]
    benchmark_mc: usize,
    /// Samples averaged for the sample-study population value.
    #[arg(long, default_value_t = 5)]
    population_reps: usize,
    #[arg(long, default_value_t = cifscore::baselines::DEFAULT_GRID_COUNT)]
    grid_count: usize,
    #[arg(long, default_value_t = 500)]
    curve_points: usize,
    #[command(flatten)]
    jobs: Jobs,
    /// Long-format CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Number of resamples.
    #[arg(long, default_value_t = 200)]
    boot: usize,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    jobs: Jobs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Serialize)]
struct EvaluateReport {
    tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_quantile: Option<f64>,
    cause: u32,
    variant: Variant,
    n: usize,
    n_uncensored: usize,
    censored_fraction: f64,
    r2: f64,
    l2: f64,
    pseudo_r2: f64,
    calibration_intercept: f64,
    calibration_slope: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    brier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    auc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cindex: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapInterval>,
}

impl EvaluateReport {
    fn rows(&self) -> Vec<(&'static str, String)> {
        let mut rows = vec![("tau", format_f64(self.tau))];
        if let Some(q) = self.tau_quantile {
            rows.push(("tau_quantile", format_f64(q)));
        }
        rows.extend([
            ("cause", self.cause.to_string()),
            ("variant", self.variant.to_string()),
            ("n", self.n.to_string()),
            ("n_uncensored", self.n_uncensored.to_string()),
            ("censored_fraction", format_f64(self.censored_fraction)),
            ("r2", format_f64(self.r2)),
            ("l2", format_f64(self.l2)),
            ("pseudo_r2", format_f64(self.pseudo_r2)),
            ("calibration_intercept", format_f64(self.calibration_intercept)),
            ("calibration_slope", format_f64(self.calibration_slope)),
        ]);
        for (name, v) in [("brier", self.brier), ("auc", self.auc), ("cindex", self.cindex)] {
            if let Some(v) = v {
                rows.push((name, format_f64(v)));
            }
        }
        if let Some(b) = &self.bootstrap {
            rows.extend(interval_rows(b));
        }
        rows
    }
}

fn interval_rows(b: &BootstrapInterval) -> Vec<(&'static str, String)> {
    vec![
        ("estimate", format_f64(b.estimate)),
        ("lower", format_f64(b.lower)),
        ("upper", format_f64(b.upper)),
        ("level", format_f64(b.level)),
        ("resamples", b.resamples.to_string()),
        ("failures", b.failures.to_string()),
    ]
}

fn metric_csv(rows: &[(&str, String)]) -> String {
    let mut s = String::from("metric,value\n");
    for (k, v) in rows {
        s.push_str(&format!("{k},{v}\n"));
    }
    s
}

fn render<T: Serialize>(format: Format, value: &T, rows: &[(&str, String)]) -> Result<String> {
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(value)? + "\n",
        Format::Csv => metric_csv(rows),
    })
}

/// Writes the whole report in one go so a failed run leaves no partial file.
fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn set_jobs(jobs: &Jobs) -> Result<()> {
    if let Some(j) = jobs.jobs {
        if j == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    Ok(())
}

fn check_inputs(inputs: &Inputs) -> Result<()> {
    if let Some(t) = inputs.tau {
        if !(t > 0.0 && t.is_finite()) {
            bail!("--tau must be a positive finite time, got {t}");
        }
    }
    if let Some(q) = inputs.tau_quantile {
        if !(q > 0.0 && q <= 1.0) {
            bail!("--tau-quantile must lie in (0, 1], got {q}");
        }
    }
    if inputs.cause == 0 || inputs.cause > inputs.causes {
        bail!("--cause must lie in 1..={}, got {}", inputs.causes, inputs.cause);
    }
    Ok(())
}

fn check_bootstrap(boot: usize, level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        bail!("--level must lie in (0, 1), got {level}");
    }
    if boot < MIN_RESAMPLES {
        bail!("--boot must be at least {MIN_RESAMPLES}, got {boot}");
    }
    Ok(())
}

struct Loaded {
    dataset: Dataset,
    predictions: PredictionSet,
    tau: f64,
}

fn load(inputs: &Inputs) -> Result<Loaded> {
    let dataset = read_dataset(&inputs.data, inputs.causes)?;
    let predictions = read_predictions(&inputs.pred, inputs.cause)?;
    predictions.align(&dataset)?;
    let ids: HashSet<&str> = dataset.records().iter().map(|r| r.id.as_str()).collect();
    let mut extra: Vec<&String> = predictions.iter().map(|(id, _)| id).filter(|id| !ids.contains(id.as_str())).collect();
    extra.sort();
    if let Some(id) = extra.first() {
        bail!("predictions for subject {id} not present in {}", inputs.data.display());
    }
    let tau = match (inputs.tau, inputs.tau_quantile) {
        (Some(t), _) => t,
        (None, Some(q)) => event_time_quantile(&dataset.times(), &dataset.events(), q)?,
        (None, None) => bail!("one of --tau or --tau-quantile is required"),
    };
    Ok(Loaded { dataset, predictions, tau })
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let inp = &args.inputs;
    check_inputs(inp)?;
    if args.grid_count == 0 {
        bail!("--grid-count must be at least 1");
    }
    if let Some(b) = args.boot {
        check_bootstrap(b, args.level)?;
    }
    set_jobs(&args.jobs)?;
    let Loaded { dataset, predictions, tau } = load(inp)?;
    let variant = Variant::from(inp.variant);
    let report = pseudo_r2(&dataset, &predictions, tau, inp.cause, variant)?;

    let wants = |m: Metric| args.metrics.contains(&m) || args.metrics.contains(&Metric::All);
    let grid = if wants(Metric::Brier) || wants(Metric::Auc) {
        Some(QuantileGrid::for_dataset(&dataset, args.grid_count)?)
    } else {
        None
    };
    let brier = match &grid {
        Some(g) if wants(Metric::Brier) => Some(brier_average(&dataset, &predictions, g, inp.cause)?),
        _ => None,
    };
    let auc = match &grid {
        Some(g) if wants(Metric::Auc) => Some(auc_average(&dataset, &predictions, g, inp.cause)?),
        _ => None,
    };
    let cindex = if wants(Metric::Cindex) {
        Some(cindex_from_predictions(&dataset, &predictions, tau, inp.cause)?)
    } else {
        None
    };
    let bootstrap = match args.boot {
        Some(b) => Some(bootstrap_ci(&dataset, &predictions, tau, inp.cause, variant, b, args.level, args.seed)?),
        None => None,
    };

    let out = EvaluateReport {
        tau,
        tau_quantile: inp.tau_quantile,
        cause: inp.cause,
        variant,
        n: dataset.len(),
        n_uncensored: dataset.n_uncensored(),
        censored_fraction: dataset.censored_fraction(),
        r2: report.r2,
        l2: report.l2,
        pseudo_r2: report.pseudo_r2,
        calibration_intercept: report.calibration_intercept,
        calibration_slope: report.calibration_slope,
        brier,
        auc,
        cindex,
        bootstrap,
    };
    emit(args.out.as_deref(), render(args.format, &out, &out.rows())?.as_bytes())
}

#[derive(Serialize)]
struct BootstrapReport {
    tau: f64,
    cause: u32,
    variant: Variant,
    n: usize,
    #[serde(flatten)]
    interval: BootstrapInterval,
}

fn cmd_bootstrap(args: &BootstrapArgs) -> Result<()> {
    let inp = &args.inputs;
    check_inputs(inp)?;
    check_bootstrap(args.boot, args.level)?;
    set_jobs(&args.jobs)?;
    let Loaded { dataset, predictions, tau } = load(inp)?;
    let variant = Variant::from(inp.variant);
    let interval = bootstrap_ci(&dataset, &predictions, tau, inp.cause, variant, args.boot, args.level, args.seed)?;
    let mut rows = vec![("tau", format_f64(tau))];
    rows.extend(interval_rows(&interval));
    let out = BootstrapReport {
        tau,
        cause: inp.cause,
        variant,
        n: dataset.len(),
        interval,
    };
    emit(args.out.as_deref(), render(args.format, &out, &rows)?.as_bytes())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut scenario = match &args.scenario {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SimScenario::from_toml_str(&text).with_context(|| format!("scenario {}", p.display()))?
        }
        None => SimScenario::default(),
    };
    if let Some(n) = args.n {
        scenario.n = n;
    }
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    if let Some(c) = args.censor_rate {
        scenario.censor_rate = c;
    }
    scenario.validate()?;
    if args.emit_true_cif && args.curve_points == 0 {
        bail!("--curve-points must be at least 1");
    }
    set_jobs(&args.jobs)?;

    let sim = simulate(&scenario)?;
    match &sim.lambda2 {
        Some(sol) => eprintln!("lambda2 = {} (solved; type-1 proportion {:.4})", sol.lambda2, sol.achieved),
        None => eprintln!("lambda2 = {} (given)", sim.scenario.lambda2.unwrap_or(f64::NAN)),
    }
    let model = sim.scenario.model()?;
    let realized = sim.data.cause.iter().filter(|&&c| c == 1).count() as f64 / sim.data.len() as f64;
    eprintln!("type-1 proportion in sample = {realized:.4}");
    if let Some(fit) = &sim.censoring {
        eprintln!(
            "censoring: target {:.4}, achieved {:.4} (mu {}, sd {})",
            scenario.censor_rate, fit.achieved, fit.mu, fit.sd
        );
    } else {
        eprintln!("censoring: none");
    }

    let mut buf = Vec::new();
    write_records(&mut buf, &sim.data.to_records())?;
    let mut pred_buf = Vec::new();
    if args.emit_true_cif {
        let dim = sim.scenario.covariate_dim;
        let grid = default_time_grid(&model, dim, args.curve_points, sim.scenario.seed)?;
        let variant = match args.provider {
            ProviderArg::Full => ProviderVariant::Full,
            ProviderArg::Reduced => ProviderVariant::Reduced(vec![dim - 1]),
            ProviderArg::Sigma5 => ProviderVariant::Distorted(model.with_fixed_scale(DISTORTED_SIGMA)?),
        };
        let provider = cif_provider(&sim.scenario, &variant, grid)?;
        let curves = provider_curves(&sim.data, &provider);
        let ids: Vec<String> = (0..sim.data.len()).map(SimulatedData::subject_id).collect();
        write_predictions(&mut pred_buf, &ids, &curves)?;
    }
    emit(Some(&args.out), &buf)?;
    if let Some(p) = args.pred.as_deref().filter(|_| args.emit_true_cif) {
        emit(Some(p), &pred_buf)?;
    }
    Ok(())
}

fn cmd_replicate(args: &ReplicateArgs) -> Result<()> {
    if args.reps == 0 || args.n_test == 0 || args.population_reps == 0 || args.grid_count == 0 || args.curve_points == 0 {
        bail!("--reps, --n-test, --population-reps, --grid-count and --curve-points must be positive");
    }
    set_jobs(&args.jobs)?;
    let cfg = ReplicateConfig {
        reps: args.reps,
        seed: args.seed,
        n_test: args.n_test,
        grid_count: args.grid_count,
        benchmark_mc: args.benchmark_mc,
        population_reps: args.population_reps,
        curve_points: args.curve_points,
        ..ReplicateConfig::default()
    };
    let rows = run_experiment(args.experiment, &cfg)?;
    let mut buf = Vec::new();
    write_long(&mut buf, &rows)?;
    emit(args.out.as_deref(), &buf)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Replicate(a) => cmd_replicate(a),
        Command::Bootstrap(a) => cmd_bootstrap(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
