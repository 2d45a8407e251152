//! `urnlab` command line: simulate batches, run verification suites, sweep
//! parameter grids.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use urnlab::simulate::GridRule;

#[derive(Debug, Parser)]
#[command(name = "urnlab", version, about = "Randomly reinforced urn simulation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a batch and write trajectories.csv, summary.json and manifest.json.
    Simulate(SimulateArgs),
    /// Run verification suites and write report.json.
    Verify(VerifyArgs),
    /// Run the Cartesian product of the config's [sweep] axes.
    Sweep(SimulateArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Worker threads.
    #[arg(long, env = "URNLAB_THREADS", default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    threads: u16,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    /// `pow2` or `linear:K`.
    #[arg(long)]
    grid: Option<GridRule>,
    /// Continue each run to K times the horizon for a limit proxy.
    #[arg(long)]
    multiplier: Option<u64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Acceptance file; defaults to the bundled one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Suite id (T1..T10) or `all`.
    #[arg(long, default_value = "all")]
    suite: String,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Sweep(a) => commands::sweep(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("urnlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
