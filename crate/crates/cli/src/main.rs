//! Command-line surface: simulate | fit | bounds | compare | bench.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 internal consistency fault.

mod bench;
mod bounds_cmd;
mod compare;
mod config;
mod fit;
mod output;
mod simulate;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use noisy_lpm::Result;

#[derive(Parser)]
#[command(name = "noisy-lpm", version, about = "Latent position network models: exact and grid-approximated Metropolis-within-Gibbs inference")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug)]
struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel likelihood evaluation (default: cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic networks from the study model.
    Simulate(simulate::SimulateArgs),
    /// Fit a network with the exact or noisy sampler.
    Fit(fit::FitArgs),
    /// Compute the approximation-error constants and bounds.
    Bounds(bounds_cmd::BoundsArgs),
    /// Compare likelihoods or fitted chains.
    #[command(subcommand)]
    Compare(compare::CompareCmd),
    /// Timing table over (mode, N, M) combinations.
    Bench(bench::BenchArgs),
}

fn dispatch() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => simulate::run(args),
        Command::Fit(args) => fit::run(args),
        Command::Bounds(args) => bounds_cmd::run(args),
        Command::Compare(cmd) => compare::run(cmd),
        Command::Bench(args) => bench::run(args),
    }
}

fn init_threads(threads: Option<usize>) {
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn main() {
    // Internal consistency faults surface as panics deep in the kernels;
    // map them to their dedicated exit code instead of the default 101.
    let outcome = std::panic::catch_unwind(dispatch);
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| payload.downcast_ref::<&str>().copied())
                .unwrap_or("panic");
            eprintln!("internal fault: {msg}");
            std::process::exit(4);
        }
    }
}
