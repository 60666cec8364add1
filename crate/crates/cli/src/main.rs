//! Command-line front end: `tau`, `ec`, `sweep`, `figure` and `validate`.

use clap::{Args, Parser, Subcommand};
use nomar_core::harness::{
    load_config, reproduce_figure, results_to_string, run_sweep, run_tau_sweep, run_validation, tau_rows_to_string,
    write_results, write_tau_rows, Axis, EstimatorChoice, FigureRun, SweepSpec, DEFAULT_SAMPLES,
};
use nomar_core::{Error, NetworkConfig, RngSeed, Strategy, StrategyModel, Variant};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nomar", version, about = "Effective capacity of OMA, NOMA and NOMA-R uplinks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Probability that NOMA-R selects NOMA, at one SNR or over a grid.
    Tau(PointArgs),
    /// Per-user and sum EC at a single operating point.
    Ec(PointArgs),
    /// Sweep described by a configuration file.
    Sweep(SweepArgs),
    /// Regenerate the data behind figure 1, 2, 3 or 4.
    Figure(FigureArgs),
    /// Run the invariant suite.
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Monte-Carlo samples per point.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0: one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct PointArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Transmit SNR in dB; overrides the configuration.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Directory for the CSV output; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["cf", "mc", "both"])]
    estimator: Option<String>,
    #[arg(long, value_parser = ["event", "timeshare"])]
    variant: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; the CSV is named after the configuration file.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_parser = ["cf", "mc", "both"])]
    estimator: Option<String>,
    #[arg(long, value_parser = ["event", "timeshare"])]
    variant: Option<String>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(value_parser = clap::value_parser!(u8).range(1..=4))]
    figure: u8,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

enum Failure {
    Error(Error),
    Convergence(usize),
    Validation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn default_spec() -> Result<SweepSpec, Error> {
    Ok(SweepSpec {
        axis: Axis::SnrDb,
        grid: vec![10.0],
        base: NetworkConfig::reference(2, 10.0)?,
        strategies: vec![StrategyModel::OMA, StrategyModel::NOMA, StrategyModel::NOMA_R_EVENT],
        estimator: EstimatorChoice::Both,
        n: DEFAULT_SAMPLES,
        seed: RngSeed(0),
        workers: 0,
        out_path: None,
        powers_by_k: BTreeMap::new(),
        betas_by_k: BTreeMap::new(),
    })
}

fn apply_overrides(
    spec: &mut SweepSpec,
    run: &RunArgs,
    estimator: Option<&str>,
    variant: Option<&str>,
) -> Result<(), Error> {
    if let Some(n) = run.samples {
        spec.n = n;
    }
    if let Some(s) = run.seed {
        spec.seed = RngSeed(s);
    }
    spec.workers = run.workers;
    if let Some(e) = estimator {
        spec.estimator = EstimatorChoice::parse(e)?;
    }
    if let Some(v) = variant {
        let v = Variant::parse(v)?;
        let mut models = Vec::new();
        for m in &spec.strategies {
            let m = if m.strategy() == Strategy::NomaR {
                StrategyModel::new(Strategy::NomaR, Some(v))?
            } else {
                *m
            };
            if !models.contains(&m) {
                models.push(m);
            }
        }
        spec.strategies = models;
    }
    spec.validate()
}

fn point_spec(args: &PointArgs, tau: bool) -> Result<SweepSpec, Error> {
    let mut spec = match &args.config {
        Some(path) => load_config(path)?,
        None => {
            let mut s = default_spec()?;
            if tau && args.snr_db.is_none() {
                s.grid = (0..=16).map(|i| -40.0 + 5.0 * i as f64).collect();
            }
            s
        }
    };
    if let Some(db) = args.snr_db {
        spec.axis = Axis::SnrDb;
        spec.grid = vec![db];
    } else if !tau && spec.grid.len() > 1 {
        return Err(Error::Config("ec evaluates one point; pass --snr-db or use sweep".into()));
    }
    apply_overrides(&mut spec, &args.run, args.estimator.as_deref(), args.variant.as_deref())?;
    Ok(spec)
}

fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Tau(args) => {
            let spec = point_spec(&args, true)?;
            let rows = run_tau_sweep(&spec)?;
            match &args.out {
                Some(dir) => {
                    let path = out_file(dir, "tau.csv");
                    write_tau_rows(&path, &spec.to_string(), &rows)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{}", tau_rows_to_string(&rows)),
            }
        }
        Command::Ec(args) => {
            let spec = point_spec(&args, false)?;
            let table = run_sweep(&spec)?;
            match &args.out {
                Some(dir) => {
                    let path = out_file(dir, "ec.csv");
                    write_results(&path, &spec.to_string(), &table.rows)?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{}", results_to_string(&table.rows)),
            }
            if table.convergence_failures > 0 {
                return Err(Failure::Convergence(table.convergence_failures));
            }
        }
        Command::Sweep(args) => {
            let mut spec = load_config(&args.config)?;
            apply_overrides(&mut spec, &args.run, args.estimator.as_deref(), args.variant.as_deref())?;
            let stem = args
                .config
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sweep".into());
            let path = out_file(&args.out, &format!("{stem}.csv"));
            spec.out_path = Some(path.clone());
            let table = run_sweep(&spec)?;
            eprintln!("wrote {} ({} rows)", path.display(), table.rows.len());
            if table.convergence_failures > 0 {
                return Err(Failure::Convergence(table.convergence_failures));
            }
        }
        Command::Figure(args) => {
            let run = FigureRun {
                n: args.run.samples.unwrap_or(DEFAULT_SAMPLES),
                seed: RngSeed(args.run.seed.unwrap_or(0)),
                workers: args.run.workers,
            };
            if run.n == 0 {
                return Err(Error::Config("--samples must be at least 1".into()).into());
            }
            for path in reproduce_figure(args.figure, &args.out, &run)? {
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Validate(args) => {
            let n = args.samples.unwrap_or(200_000);
            if n == 0 {
                return Err(Error::Config("--samples must be at least 1".into()).into());
            }
            let report = run_validation(n, RngSeed(args.seed.unwrap_or(0)), args.workers);
            println!("{report}");
            if !report.passed() {
                return Err(Failure::Validation);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(4),
        Err(Failure::Convergence(n)) => {
            eprintln!("error: {n} closed-form evaluation(s) did not converge");
            ExitCode::from(3)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) | Error::Parse(_) => 2,
                Error::Convergence { .. } => 3,
                _ => 1,
            })
        }
    }
}
