mod config;
mod learn;
mod reduce;
mod report;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{Problem, RunConfig, Suite, CONFIG_SCHEMA_VERSION};

#[derive(Parser)]
#[command(
    name = "simplex-learn",
    version,
    about = "Learn simplices from uniform samples and run the ICA reductions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a simplex from uniform points (synthetic isotropic simplex or --input CSV).
    Learn(CommonArgs),
    /// Recover a simplex or l_p ball through ICA.
    Reduce(CommonArgs),
    /// Run a verification suite.
    Verify(CommonArgs),
}

#[derive(Args, Clone, Debug, Default)]
struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Exponent of the l_p ball, in [1, 64].
    #[arg(long)]
    p: Option<f64>,
    /// Sample size for reduce and verify.
    #[arg(long)]
    t: Option<usize>,
    /// Points for the mean and covariance.
    #[arg(long)]
    t1: Option<usize>,
    /// Points per gradient evaluation.
    #[arg(long)]
    t3: Option<usize>,
    /// Vertex-finder repetitions.
    #[arg(long)]
    m: Option<usize>,
    /// Fixed-point iterations per repetition.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Report path (default: $SIMPLEX_LEARN_OUT_DIR/<command>-report.json).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    suite: Option<Suite>,
    #[arg(long, value_enum)]
    problem: Option<Problem>,
    /// Monte Carlo points for TV and volume estimates.
    #[arg(long)]
    mc_points: Option<usize>,
    /// Reuse one gradient sample for every repetition.
    #[arg(long)]
    shared_sample: bool,
    /// CSV of input points for learn, one point per row.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Also write the recovered vertices (or matrix columns) as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

impl CommonArgs {
    fn resolve(self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            n: self.n,
            p: self.p,
            t: self.t,
            t1: self.t1,
            t3: self.t3,
            m: self.m,
            r: self.r,
            seed: self.seed,
            threads: self.threads,
            out: self.out,
            suite: self.suite,
            problem: self.problem,
            mc_points: self.mc_points,
            shared_sample: self.shared_sample.then_some(true),
            input: self.input,
            csv: self.csv,
        };
        Ok(base.merged(flags))
    }
}

/// Whether the command fully succeeded (exit 0) or ran but fell short (exit 2).
pub enum Status {
    Complete,
    Incomplete,
}

fn run(cli: Cli) -> Result<Status> {
    let (name, args) = match cli.command {
        Command::Learn(a) => ("learn", a),
        Command::Reduce(a) => ("reduce", a),
        Command::Verify(a) => ("verify", a),
    };
    let config = args.resolve()?;
    if let Some(threads) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match name {
        "learn" => learn::run(&config),
        "reduce" => reduce::run(&config),
        _ => verify::run(&config),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(Status::Incomplete) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
