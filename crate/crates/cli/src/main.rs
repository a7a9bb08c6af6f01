//! chainq: mempool queueing analytics, simulation, Monte Carlo price impact
//! and sandwich auditing.
//!
//! Exit codes: 0 on success, 2 for config or parse errors, 3 for numerical
//! failures.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chainq_core::error::Error as CoreError;
use commands::Format;
use config::{load_json, AnalyticDocument, McDocument, SimDocument};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "chainq",
    version,
    about = "Mempool queueing analytics, simulation and CFMM order-flow tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Path to the JSON config document.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Output format for tables and traces.
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
    /// Worker threads for Monte Carlo replications (deterministic for any
    /// value).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic distribution tables of block number and in-block position.
    Analytic(CommonArgs),
    /// Discrete-event mempool simulation.
    Simulate(CommonArgs),
    /// Monte Carlo execution-price statistics.
    McPrice(CommonArgs),
    /// Sandwicher-scheduler run with a per-victim guarantee audit.
    SandwichAudit(CommonArgs),
    /// Estimate queue-model inputs from a confirmed-block CSV.
    Ingest {
        /// Input CSV with header block_number,tx_index,priority.
        input: PathBuf,
        /// Block capacity.
        #[arg(long)]
        beta: usize,
        /// Priority threshold: rows strictly above it count as high-priority.
        #[arg(long, allow_negative_numbers = true)]
        threshold: f64,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analytic(args) => {
            let raw = std::fs::read(&args.config)?;
            let doc: AnalyticDocument = load_json(&args.config)?;
            commands::analytic::run(&doc, &raw, &args.out, args.format)
        }
        Command::Simulate(args) => {
            let raw = std::fs::read(&args.config)?;
            let mut doc: SimDocument = load_json(&args.config)?;
            if let Some(seed) = args.seed {
                doc.sim.seed = seed;
            }
            commands::simulate::run(&doc, &raw, &args.out, args.format)
        }
        Command::McPrice(args) => {
            let raw = std::fs::read(&args.config)?;
            let doc: McDocument = load_json(&args.config)?;
            with_thread_pool(args.threads, || {
                commands::mc_price::run(&doc, &raw, &args.out, args.format, args.seed)
            })
        }
        Command::SandwichAudit(args) => {
            let raw = std::fs::read(&args.config)?;
            let mut doc: SimDocument = load_json(&args.config)?;
            if let Some(seed) = args.seed {
                doc.sim.seed = seed;
            }
            commands::sandwich_audit::run(&doc, &raw, &args.out, args.format)
        }
        Command::Ingest {
            input,
            beta,
            threshold,
            out,
        } => commands::ingest::run(&input, beta, threshold, &out),
    }
}

fn with_thread_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Config and parse problems exit 2; numerical failures exit 3.
fn classify(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(core) = cause.downcast_ref::<CoreError>() {
            return match core {
                CoreError::RootNotConverged { .. }
                | CoreError::NumericalInstability(_)
                | CoreError::PriorityTie(_)
                | CoreError::InjectedNotDominant { .. }
                | CoreError::ReservesExhausted { .. } => EXIT_NUMERICAL,
                _ => EXIT_CONFIG,
            };
        }
    }
    EXIT_CONFIG
}
