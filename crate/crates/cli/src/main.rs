use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use rm_hopf_cli::config::{Format, Overrides};
use rm_hopf_cli::error::CliError;

/// Near-Hopf demographic-noise diagnostics for the Rosenzweig–MacArthur model.
///
/// Exit codes: 0 success, 2 configuration error, 3 domain error.
#[derive(Debug, Parser)]
#[command(name = "rm-hopf", version)]
struct Args {
    /// JSON run configuration.
    config: PathBuf,
    /// Output path; overrides `output.path`. Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format; overrides `output.format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Simulation seed; overrides `simulation.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::ThreadPool(e.to_string()))?;
    }
    let overrides = Overrides {
        out: args.out.map(|p| p.to_string_lossy().into_owned()),
        format: args.format,
        seed: args.seed,
    };
    let rendered = rm_hopf_cli::run_file(&args.config, &overrides)?;
    rm_hopf_cli::emit(&rendered)
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
