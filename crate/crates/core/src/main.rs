use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use treestars::config::{parse_config, ExperimentConfig};
use treestars::report::{self, ReportRow, TableId};

/// Environment override for the worker count. Precedence: `--workers` flag,
/// then this variable, then the configuration file.
const WORKERS_ENV: &str = "TREESTARS_WORKERS";

#[derive(Parser)]
#[command(
    name = "treestars",
    version,
    about = "Exact moments and Monte Carlo simulation of percolation-driven \
             loss contagion on random tree-stars graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form moments of a configuration (no simulation).
    Analytic(AnalyticArgs),
    /// Run a configuration: simulation plus closed forms where available.
    Simulate(SimulateArgs),
    /// Emit a built-in benchmark grid (table 2: root scenario sweep,
    /// table 3: external scenario sweep).
    Tables(TablesArgs),
}

#[derive(Args)]
struct AnalyticArgs {
    /// JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Report destination (defaults to the config's `output`, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Override the configured replication count.
    #[arg(long)]
    reps: Option<u64>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured worker count (beats TREESTARS_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    /// Report destination (defaults to the config's `output`, else stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TablesArgs {
    /// Which grid: 2 or 3.
    #[arg(long)]
    table: u8,
    /// Replications per row; 0 emits the analytic columns only.
    #[arg(long, default_value_t = 0)]
    reps: u64,
    /// Base seed; row i uses seed + i.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Worker threads (beats TREESTARS_WORKERS; default 1).
    #[arg(long)]
    workers: Option<usize>,
    /// Report destination (defaults to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Analytic(args) => {
            let mut cfg = load_config(&args.config)?;
            cfg.run_analytic = true;
            cfg.run_simulation = false;
            let rows = report::run_experiment(&cfg)?;
            emit(&rows, args.out.as_deref().or(cfg.output.as_deref()))
        }
        Command::Simulate(args) => {
            let mut cfg = load_config(&args.config)?;
            cfg.run_simulation = true;
            if let Some(reps) = args.reps {
                cfg.run.replications = reps;
            }
            if let Some(seed) = args.seed {
                cfg.run.seed = seed;
            }
            cfg.run.workers = resolve_workers(args.workers, cfg.run.workers)?;
            let rows = report::run_experiment(&cfg)?;
            emit(&rows, args.out.as_deref().or(cfg.output.as_deref()))
        }
        Command::Tables(args) => {
            let table = match args.table {
                2 => TableId::Table2,
                3 => TableId::Table3,
                other => bail!("--table must be 2 or 3, got {other}"),
            };
            let workers = resolve_workers(args.workers, 1)?;
            let rows = report::reproduce_tables(table, args.reps, args.seed, workers)?;
            emit(&rows, args.out.as_deref())
        }
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("parsing config {}", path.display()))
}

fn resolve_workers(flag: Option<usize>, fallback: usize) -> Result<usize> {
    if let Some(workers) = flag {
        return Ok(workers);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .with_context(|| format!("{WORKERS_ENV} must be a worker count, got {raw:?}")),
        Err(std::env::VarError::NotPresent) => Ok(fallback),
        Err(err) => Err(err).context(format!("reading {WORKERS_ENV}")),
    }
}

fn emit(rows: &[ReportRow], out: Option<&Path>) -> Result<()> {
    let csv_text = report::render_csv(rows);
    match out {
        Some(path) => std::fs::write(path, csv_text)
            .with_context(|| format!("writing report {}", path.display())),
        None => {
            print!("{csv_text}");
            Ok(())
        }
    }
}
