use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lpcoreset::Error;

mod experiment;
mod io;
mod solve;

#[derive(Debug, Parser)]
#[command(name = "lpcoreset", version, about = "Lewis weight sampling for lp regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve min_x ||Ax - b||_p on a sampled coreset.
    Solve(solve::SolveArgs),
    /// Run a Lewis-versus-uniform sampling sweep and write CSV summaries.
    Experiment(experiment::ExperimentArgs),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericalFailure(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LPCORESET_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Solve(args) => solve::run(args),
        Command::Experiment(args) => experiment::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
