#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod csv;
mod error;
mod svg;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Overrides;
use crate::error::CliError;

/// Redfield dynamics with regularized Kossakowski matrices.
#[derive(Parser)]
#[command(name = "redreg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Norm used for ranking and plots: frobenius | trace.
    #[arg(long)]
    norm: Option<String>,
    /// Integrator tolerance, relative and absolute (overrides `tol`).
    #[arg(long)]
    tol: Option<f64>,
    /// Scheme to run; repeat to run several (replaces `schemes`).
    #[arg(long = "scheme")]
    schemes: Vec<String>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the density matrix under each scheme and write trajectory CSVs.
    Simulate(RunArgs),
    /// Compare each scheme's dynamical map with the exact V-system channel.
    ChoiDistance(RunArgs),
    /// Run the built-in consistency checks.
    Validate {
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = validate::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1.0, hide = true)]
        tolerance_scale: f64,
    },
    /// List the available schemes.
    Schemes,
}

fn resolve(args: &RunArgs) -> Result<config::Run, CliError> {
    let over = Overrides {
        out: args.out.clone(),
        norm: args.norm.clone(),
        tol: args.tol,
        schemes: args.schemes.clone(),
        svg: args.svg,
    };
    config::load(&args.config)?.resolve(&over)
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let run = resolve(&args)?;
            for path in commands::simulate(&run)? {
                println!("wrote {}", path.display());
            }
        }
        Command::ChoiDistance(args) => {
            let run = resolve(&args)?;
            let (paths, summary) = commands::choi_distance(&run)?;
            for path in paths {
                println!("wrote {}", path.display());
            }
            let mut ranked = summary.clone();
            ranked.sort_by_key(|s| s.rank);
            println!("mean δ over [0, {}] ({} norm ranking):", run.short_window, run.norm);
            for s in ranked {
                println!(
                    "  {}. {:<24} frobenius {:.4e}  trace {:.4e}",
                    s.rank,
                    s.method.name(),
                    s.short_frobenius,
                    s.short_trace
                );
            }
        }
        Command::Validate { seed, tolerance_scale } => {
            let results = validate::run_all(seed, tolerance_scale);
            print!("{}", validate::report(&results));
            if !results.iter().all(validate::CheckResult::passed) {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Schemes => {
            for (name, help) in commands::SCHEME_HELP {
                println!("{name:<36} {help}");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("redreg: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
