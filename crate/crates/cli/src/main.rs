//! `grushin`: distances, verification suites, decompositions and embeddings
//! for conformal Grushin spaces described by a JSON space spec.
//!
//! Exit codes: 0 pass, 1 violation found, 2 usage or spec error, 3 numerical failure.

mod decompose;
mod dist;
mod embed;
mod error;
mod output;
mod spec;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "grushin", version, about = "Computations on conformal Grushin spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-sided bounds on the distance between two points.
    Dist(dist::DistArgs),
    /// Property checks on seeded samples.
    Verify {
        #[command(subcommand)]
        which: verify::Which,
    },
    /// Christ–Whitney decomposition of a grid sample of the box minus Y.
    Decompose(decompose::DecomposeArgs),
    /// Path checks and distortion of a built-in map or a JSON pipeline.
    Embed(embed::EmbedArgs),
}

/// Where the JSON report goes.
#[derive(Debug, Args)]
pub struct OutArgs {
    /// Write the JSON report here (atomically) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Rendered report and verdict.
pub struct Outcome {
    pub json: String,
    pub passed: bool,
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("GRUSHIN_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("GRUSHIN_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    let (out, outcome) = match cli.command {
        Command::Dist(a) => (a.out.out.clone(), dist::run(&a)?),
        Command::Verify { which } => (which.out().out.clone(), verify::run(&which)?),
        Command::Decompose(a) => (a.out.out.clone(), decompose::run(&a)?),
        Command::Embed(a) => (a.out.out.clone(), embed::run(&a)?),
    };
    output::emit(out.as_deref(), &outcome.json)?;
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
