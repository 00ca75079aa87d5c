use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nonlinear_levy::validation::format_table;
use nonlinear_levy_cli::{run, CliError, Command, RunConfig};

/// Solve, simulate and cross-check nonlinear Lévy value functions.
#[derive(Debug, Parser)]
#[command(name = "nlevy", version)]
struct Args {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("nlevy: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(args: &Args) -> Result<bool, CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config { key: "--threads".into(), message: e.to_string() })?;
    }
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(out) = &args.out {
        // an absolute path survives the join with the config directory
        cfg.out = std::path::absolute(out).map_err(|source| CliError::Io { path: out.clone(), source })?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let outcome = run(&cfg, args.command, &base)?;
    if !outcome.reports.is_empty() {
        print!("{}", format_table(&outcome.reports));
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    if !outcome.passed {
        eprintln!("nlevy: gated checks failed");
    }
    Ok(outcome.passed)
}
