//! `randpick` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad input, 3 infeasible
//! parameters, 4 exact-size limit exceeded, 5 finished with a warning.

mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use config::Command;

#[derive(Debug, Parser)]
#[command(name = "randpick", version, about = "Random Pick competitive diffusion toolkit")]
struct Cli {
    /// Write the command's configuration as TOML before running it.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Error carrying the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, error: anyhow::anyhow!(msg.into()) }
    }
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let code = exit_code(&error);
        Failure { code, error }
    }
}

fn exit_code(error: &anyhow::Error) -> u8 {
    use randpick::Error as E;
    for cause in error.chain() {
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::Infeasible(_) => 3,
                E::TooLarge { .. } => 4,
                E::NonConvergence { .. } => 1,
                _ => 2,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<toml::de::Error>().is_some()
        {
            return 2;
        }
    }
    1
}

/// What a successful command reports back.
pub enum Outcome {
    Done,
    Warning(String),
}

fn run(cli: Cli) -> Result<Outcome, Failure> {
    let command = match cli.command {
        Command::Run { config } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            toml::from_str::<Command>(&text)
                .with_context(|| format!("parsing {}", config.display()))?
        }
        other => other,
    };
    if let Some(path) = &cli.save_config {
        let text = toml::to_string(&command).context("serializing config")?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    commands::execute(&command)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Warning(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(5)
        }
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
