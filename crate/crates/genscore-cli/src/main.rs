//! Command-line front end: estimation from data files, sampling,
//! support-recovery sweeps, univariate variance curves, and domain
//! probes, each leaving a run manifest next to its outputs.

// Validation guards are written as negated comparisons so that NaN
// parameters fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod cmd_domain;
mod cmd_estimate;
mod cmd_sample;
mod cmd_sweep;
mod cmd_univariate;
mod io;

use clap::Parser;

use crate::io::CliError;

const EXIT_OK: i32 = 0;
const EXIT_NUMERIC: i32 = 3;
const EXIT_USAGE: i32 = 64;

#[derive(Parser)]
#[command(
    name = "genscore",
    version,
    about = "Regularized score matching for pairwise interaction power models on general domains",
    disable_help_subcommand = true
)]
struct Cli {
    /// Worker threads; falls back to GENSCORE_THREADS, then all cores.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Fit a regularization path to a data matrix and export the edges.
    Estimate(cmd_estimate::EstimateArgs),
    /// Draw Gibbs samples from a model restricted to a domain.
    Sample(cmd_sample::SampleArgs),
    /// Run a support-recovery sweep over weight settings.
    Sweep(cmd_sweep::SweepArgs),
    /// Tabulate univariate asymptotic variances over a weight grid.
    Univariate(cmd_univariate::UnivariateArgs),
    /// Inspect sections, distances, and weights of a domain.
    Domain(cmd_domain::DomainArgs),
}

fn init_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("GENSCORE_THREADS") {
            Ok(v) => Some(v.parse::<usize>().map_err(|_| {
                CliError::validation(format!("GENSCORE_THREADS must be an integer, got {v:?}"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::validation("thread count must be positive"));
        }
        // A pool may already exist (repeated init in tests); the first
        // configuration wins, which is fine for determinism.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(EXIT_OK);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(EXIT_USAGE);
                }
            }
        }
    };
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {}", e.message);
        std::process::exit(e.code);
    }
    let outcome = match cli.command {
        Command::Estimate(args) => cmd_estimate::run(args),
        Command::Sample(args) => cmd_sample::run(args),
        Command::Sweep(args) => cmd_sweep::run(args),
        Command::Univariate(args) => cmd_univariate::run(args),
        Command::Domain(args) => cmd_domain::run(args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            std::process::exit(e.code);
        }
    }
}
