//! Command-line experiment runner: `run` executes a configured experiment,
//! `plot` renders aggregate CSVs as an SVG, `table` prints a summary of
//! final values, and `check` runs the counterexample/KKT demonstrations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use albo::auglag::{al_saddle_check, AlState, AlVariant};
use albo::harness::{
    emit_plot, read_aggregate_csv, run_experiment, ExperimentConfig, HarnessError, PlotSeries,
};
use albo::problems::{
    counterexample_minimizer, counterexample_penalized_gradient, make_counterexample_1d,
    make_version, ToyVersion,
};

#[derive(Parser)]
#[command(
    name = "albo",
    about = "Augmented-Lagrangian Bayesian optimization benchmark harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-restart experiment and write CSV outputs.
    Run(RunArgs),
    /// Render aggregate CSVs as an SVG convergence plot.
    Plot(PlotArgs),
    /// Print a summary table of final mean values from aggregate CSVs.
    Table(TableArgs),
    /// Run the counterexample and KKT demonstration suite.
    Check,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem id: toy, v1, v2, v3, counterexample-1d.
    #[arg(long)]
    problem: Option<String>,
    /// Strategy id: random, nomax, withmax.
    #[arg(long)]
    strategy: Option<String>,
    /// Surrogate id: indep, lmc.
    #[arg(long)]
    surrogate: Option<String>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Total evaluations per restart.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long = "n-init")]
    n_init: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restart-level parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// Aggregate CSV files (repeatable).
    #[arg(long = "in", required = true)]
    inputs: Vec<PathBuf>,
    /// Series labels, comma separated; defaults to file stems.
    #[arg(long, value_delimiter = ',')]
    labels: Vec<String>,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TableArgs {
    /// Aggregate CSV files (repeatable).
    #[arg(long = "in", required = true)]
    inputs: Vec<PathBuf>,
}

fn cmd_run(args: RunArgs) -> Result<(), HarnessError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.problem {
        cfg.problem = v;
    }
    if let Some(v) = args.strategy {
        cfg.strategy = v;
    }
    if let Some(v) = args.surrogate {
        cfg.surrogate = v;
    }
    if let Some(v) = args.restarts {
        cfg.restarts = v;
    }
    if let Some(v) = args.budget {
        cfg.budget = v;
        cfg.n_iter = None;
    }
    if let Some(v) = args.n_init {
        cfg.n_init = v;
        cfg.n_iter = None;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.jobs {
        cfg.jobs = v;
    }
    if let Some(v) = args.out {
        cfg.output_dir = v;
    }

    let agg = run_experiment(&cfg)?;
    println!(
        "{}: final mean best feasible {:.6} +/- {:.6} over {} restarts ({} excluded, never feasible)",
        cfg.stem(),
        agg.final_mean,
        agg.final_stderr,
        agg.n_included,
        agg.n_excluded
    );
    println!(
        "wrote {} restart CSVs and {}_aggregate.csv under {}",
        cfg.restarts,
        cfg.stem(),
        cfg.output_dir.display()
    );
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<(), HarnessError> {
    if !args.labels.is_empty() && args.labels.len() != args.inputs.len() {
        return Err(HarnessError::Config(format!(
            "{} labels for {} inputs",
            args.labels.len(),
            args.inputs.len()
        )));
    }
    let mut series = Vec::new();
    for (i, path) in args.inputs.iter().enumerate() {
        let agg = read_aggregate_csv(path)?;
        let label = args
            .labels
            .get(i)
            .cloned()
            .unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("series {i}"))
            });
        series.push(PlotSeries {
            label,
            values: agg.mean_trajectory,
        });
    }
    emit_plot(&series, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_table(args: TableArgs) -> Result<(), HarnessError> {
    println!("{:<40} {:>12} {:>12} {:>10}", "series", "final mean", "stderr", "restarts");
    for path in &args.inputs {
        let agg = read_aggregate_csv(path)?;
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        println!(
            "{:<40} {:>12.6} {:>12.6} {:>10}",
            label, agg.final_mean, agg.final_stderr, agg.n_included
        );
    }
    Ok(())
}

fn cmd_check() -> Result<(), HarnessError> {
    let mut all_ok = true;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    println!("maximum-free penalty on min (x-0.5)^2 s.t. x^2 <= 1:");
    for rho in [10.0, 1.0, 0.1, 0.01] {
        let x = counterexample_minimizer(rho).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        let g = counterexample_penalized_gradient(0.5, rho)
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        check(
            &format!("penalized minimizer, rho = {rho}"),
            (x - 0.5).abs() > 1e-3,
            format!("x* = {x:.6}, distance from 0.5 = {:.4}, gradient at 0.5 = {g:.4}", (x - 0.5).abs()),
        );
    }

    let p = make_counterexample_1d();
    for rho0 in [10.0, 1.0, 0.1] {
        let s0 = AlState::zeros(1, rho0, AlVariant::WithMax)
            .map_err(|e| HarnessError::Runtime(e.to_string()))?;
        let (x, report) =
            al_saddle_check(&p, &s0, &[-0.7]).map_err(|e| HarnessError::Runtime(e.to_string()))?;
        check(
            &format!("classic AL outer loop, rho0 = {rho0}"),
            (x[0] - 0.5).abs() <= 1e-4 && report.stationarity <= 1e-4,
            format!(
                "x = {:.6}, stationarity = {:.2e}, feasibility = {:.2e}, complementarity = {:.2e}",
                x[0], report.stationarity, report.feasibility, report.complementarity
            ),
        );
    }
    let s0 = AlState::zeros(1, 0.1, AlVariant::NoMax)
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let (x, _) =
        al_saddle_check(&p, &s0, &[0.5]).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    check(
        "maximum-free AL outer loop, rho0 = 0.1",
        (x[0] - 0.5).abs() >= 0.3,
        format!("x = {:.6}, pulled {:.3} away from the optimum", x[0], (x[0] - 0.5).abs()),
    );

    let v1 = make_version(ToyVersion::V1);
    let s0 = AlState::zeros(2, 0.5, AlVariant::NoMax)
        .map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let (x, report) =
        al_saddle_check(&v1, &s0, &[0.5, 0.5]).map_err(|e| HarnessError::Runtime(e.to_string()))?;
    let dist = ((x[0]).powi(2) + (x[1] - 1.0).powi(2)).sqrt();
    check(
        "maximum-free AL stays viable for a linear objective",
        dist <= 0.05 && report.stationarity <= 1e-4,
        format!("x = ({:.4}, {:.4}), distance from (0,1) = {dist:.4}", x[0], x[1]),
    );

    if all_ok {
        Ok(())
    } else {
        Err(HarnessError::Runtime("one or more checks failed".into()))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Plot(args) => cmd_plot(args),
        Command::Table(args) => cmd_table(args),
        Command::Check => cmd_check(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
