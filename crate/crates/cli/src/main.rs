use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use slowfast_cli::config::OUT_ENV;
use slowfast_cli::{run_experiment, ConfigErrors, ExitStatus, ExperimentConfig, Overrides, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Invariant-measure diagnostics of the frozen fast equation.
    Frozen,
    /// Tabulate the averaged coefficients.
    Average,
    /// Weak-convergence sweep over the epsilon list.
    Converge,
    /// Option prices against the local-volatility limit.
    Price,
    /// Structural checks, ergodic diagnostics and moment bounds.
    Verify,
}

/// Slow-fast SDE experiments. Flags take precedence over the config file,
/// which takes precedence over the environment.
#[derive(Debug, Parser)]
#[command(name = "slowfast", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML experiment description.
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo paths per cell.
    #[arg(long)]
    paths: Option<usize>,
    /// Worker threads (0 = one per core).
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; defaults to `output.dir`, then the environment.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config_failure(errors: &ConfigErrors) -> ExitCode {
    let body = serde_json::json!({ "status": "config_error", "errors": errors.0 });
    eprintln!("{body}");
    ExitCode::from(ExitStatus::ConfigError.code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let sub = match cli.command {
        Command::Frozen => Subcommand::Frozen,
        Command::Average => Subcommand::Average,
        Command::Converge => Subcommand::Converge,
        Command::Price => Subcommand::Price,
        Command::Verify => Subcommand::Verify,
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => return config_failure(&ConfigErrors::single("--config", format!("{}: {e}", cli.config.display()))),
    };
    let overrides = Overrides { seed: cli.seed, paths: cli.paths, workers: cli.workers, out: cli.out };
    let env_out = std::env::var(OUT_ENV).ok();
    let cfg = match ExperimentConfig::parse(&text, &overrides, env_out.as_deref()) {
        Ok(c) => c,
        Err(errors) => return config_failure(&errors),
    };
    match run_experiment(&cfg, sub) {
        Ok(outcome) => {
            if !outcome.manifest.failures.is_empty() {
                let body = serde_json::json!({ "status": outcome.status, "failures": outcome.manifest.failures });
                eprintln!("{body}");
            }
            println!("{}", outcome.manifest_path.display());
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(e) => {
            let body = serde_json::json!({ "status": e.status(), "error": e.to_string() });
            eprintln!("{body}");
            ExitCode::from(e.status().code() as u8)
        }
    }
}
