//! `uclab`: round-trip checks, twirl verification and security games.
//!
//! Exit codes: 0 success, 2 configuration error, 3 a check failed at run time.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use uclab::Error;

use commands::Options;
use config::{ConfigError, ExperimentConfig, CONFIG_VERSION};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "uclab", version, about = "Uncloneable-encryption compiler lab")]
struct Cli {
    /// JSON experiment config. Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the game trial count.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Prefer exact evaluation over sampling where available.
    #[arg(long, global = true)]
    exact: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encrypt and decrypt every message through each layer of the stack.
    Roundtrip,
    /// Compare the pure-state channel against the t-copy twirl.
    VerifyTwirl,
    /// Play a security game and report the adversary's win rate.
    RunGame,
}

fn is_config_error(e: &Error) -> bool {
    matches!(e, Error::Config(_) | Error::TwirlConfig(_) | Error::DimensionCap { .. } | Error::Precondition(_))
}

fn emit<T: Serialize>(report: &T, out: Option<&PathBuf>) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| format!("{}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn finish<T: Serialize>(result: uclab::Result<(T, bool)>, out: Option<&PathBuf>) -> ExitCode {
    match result {
        Ok((report, passed)) => {
            if let Err(e) = emit(&report, out) {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: one or more checks failed");
                ExitCode::from(EXIT_RUNTIME)
            }
        }
        Err(e) if is_config_error(&e) => {
            eprintln!("error: invalid config: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path),
        None => ExperimentConfig::parse(&format!("{{\"version\": {CONFIG_VERSION}}}")),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                ConfigError::Read(_) | ConfigError::Parse(_) | ConfigError::Invalid(_) => EXIT_CONFIG,
            });
        }
    };
    let opts = Options { seed: cli.seed.or(cfg.seed).unwrap_or(0), trials: cli.trials, exact: cli.exact };
    let out = cli.out.as_ref();
    match cli.command {
        Command::Roundtrip => finish(commands::roundtrip(&cfg, &opts), out),
        Command::VerifyTwirl => finish(commands::verify_twirl(&cfg, &opts), out),
        Command::RunGame => {
            let result = commands::run_game(&cfg, &opts);
            if let (Ok((report, _)), Some(path)) = (&result, cfg.game.as_ref().and_then(|g| g.csv.as_ref())) {
                let written = fs::File::create(path).map_err(|e| Error::Io(e.to_string())).and_then(|f| report.body.stats.write_csv(f));
                if let Err(e) = written {
                    eprintln!("error: cannot write transcript {}: {e}", path.display());
                    return ExitCode::from(EXIT_RUNTIME);
                }
            }
            finish(result, out)
        }
    }
}
