use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use pqlap::{run, run_refine, write_outputs, Metadata, Outcome, RunConfig, RunError};

/// Solve and certify singular (p(x), q(x))-Laplacian scenarios.
///
/// Exit status: 0 when every certificate passes, 1 when one fails, 2 for
/// invalid input or a violated structural hypothesis.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output directory [default: the config's `out`, else `pqlap-out`].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized checks [default: the config's `seed`].
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// Grid refinement study of a scalar scenario.
    Refine {
        config: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
}

fn execute(cli: &Cli, path: &Path, levels: Option<usize>) -> Result<(Outcome, PathBuf), RunError> {
    let cfg = RunConfig::load(path)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let started = SystemTime::now();
    let clock = Instant::now();
    let outcome = match levels {
        Some(k) => run_refine(&cfg, k)?,
        None => run(&cfg, seed)?,
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("pqlap-out"));
    let meta = Metadata {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: Some(path.display().to_string()),
        seed,
        started_unix_ms: started
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        elapsed_ms: clock.elapsed().as_millis(),
    };
    write_outputs(&dir, &outcome, &meta)?;
    Ok((outcome, dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let (path, levels) = match &cli.command {
        Command::Run { config } => (config, None),
        Command::Refine { config, levels } => (config, Some(*levels)),
    };
    match execute(&cli, path, levels) {
        Ok((outcome, dir)) => {
            let status = outcome.status;
            if !outcome.failures.is_empty() {
                eprintln!("{}: {}", status.as_str(), outcome.failures.join(", "));
            }
            if !cli.quiet {
                println!(
                    "{} ({})",
                    status.as_str(),
                    dir.join("report.json").display()
                );
            }
            ExitCode::from(status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
