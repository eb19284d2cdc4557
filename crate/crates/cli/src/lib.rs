//! Batch command-line front end: reads a flat-text run configuration,
//! dispatches the simulation or optimization, and emits deterministic CSV
//! or JSON for plotting and regression testing.
//!
//! Exit status contract: `0` success, `1` validation or physics failure
//! (lost mass, bracket miss, degenerate parameters), `2` usage or
//! configuration error.

pub mod config;
mod commands;

use std::fmt;
use std::path::PathBuf;

use config::load_config;

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: unknown subcommand, flag, or missing argument.
    Usage(String),
    /// Unreadable or invalid configuration.
    Config(String),
    /// The run itself failed a physical or numerical gate.
    Physics(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Physics(m) => write!(f, "physics error: {m}"),
        }
    }
}

impl From<dotprobe::Error> for CliError {
    fn from(e: dotprobe::Error) -> Self {
        CliError::Physics(e.to_string())
    }
}

const USAGE: &str = "\
dotprobe - double-dot qubit / point-contact detector simulator

USAGE:
  dotprobe <SUBCOMMAND> [OPTIONS]

SUBCOMMANDS:
  simulate      CSV trajectory of the reduced qubit state and detector current
  distribution  CSV electron counting distribution P_n at t_max
  error-curve   CSV of shot, back-action and total measurement error vs window
  optimal       JSON record of the optimal measurement window and closed forms
  validate      run the built-in invariant suite, print pass/fail per property

OPTIONS:
  --config <PATH>   run configuration (required except for validate)
  --out <PATH>      write output to PATH instead of stdout
  --mode <MODE>     shot-noise mode: asymptotic | exact (overrides config)
  --oracle          distribution only: add counting-field oracle column
";

struct Invocation {
    command: String,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    mode: Option<dotprobe::ErrorMode>,
    oracle: bool,
}

fn parse_args(args: &[String]) -> Result<Invocation, CliError> {
    let mut it = args.iter();
    let command = it
        .next()
        .ok_or_else(|| CliError::Usage(format!("missing subcommand\n{USAGE}")))?
        .clone();
    let mut inv = Invocation {
        command,
        config: None,
        out: None,
        mode: None,
        oracle: false,
    };
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage("--config needs a path".into()))?;
                inv.config = Some(PathBuf::from(v));
            }
            "--out" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage("--out needs a path".into()))?;
                inv.out = Some(PathBuf::from(v));
            }
            "--mode" => {
                let v = it
                    .next()
                    .ok_or_else(|| CliError::Usage("--mode needs a value".into()))?;
                inv.mode = Some(match v.as_str() {
                    "asymptotic" => dotprobe::ErrorMode::Asymptotic,
                    "exact" => dotprobe::ErrorMode::Exact,
                    other => {
                        return Err(CliError::Usage(format!(
                            "--mode must be `asymptotic` or `exact`, got `{other}`"
                        )))
                    }
                });
            }
            "--oracle" => inv.oracle = true,
            other => return Err(CliError::Usage(format!("unknown option `{other}`\n{USAGE}"))),
        }
    }
    Ok(inv)
}

fn dispatch(args: &[String]) -> Result<(), CliError> {
    let inv = parse_args(args)?;

    if inv.command == "validate" {
        if inv.config.is_some() || inv.out.is_some() || inv.mode.is_some() || inv.oracle {
            return Err(CliError::Usage("validate takes no options".into()));
        }
        return commands::validate();
    }

    let make_config = || -> Result<config::SimConfig, CliError> {
        let path = inv
            .config
            .as_ref()
            .ok_or_else(|| CliError::Usage(format!("`{}` needs --config\n{USAGE}", inv.command)))?;
        let mut cfg = load_config(path).map_err(|e| CliError::Config(e.to_string()))?;
        if let Some(mode) = inv.mode {
            cfg.error_mode = mode;
        }
        Ok(cfg)
    };

    let output = match inv.command.as_str() {
        "simulate" => {
            if inv.oracle {
                return Err(CliError::Usage("--oracle only applies to distribution".into()));
            }
            commands::simulate(&make_config()?)?
        }
        "distribution" => commands::distribution(&make_config()?, inv.oracle)?,
        "error-curve" => {
            if inv.oracle {
                return Err(CliError::Usage("--oracle only applies to distribution".into()));
            }
            commands::error_curve(&make_config()?)?
        }
        "optimal" => {
            if inv.oracle {
                return Err(CliError::Usage("--oracle only applies to distribution".into()));
            }
            commands::optimal(&make_config()?)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown subcommand `{other}`\n{USAGE}"
            )))
        }
    };

    match inv.out {
        Some(path) => std::fs::write(&path, output).map_err(|e| {
            CliError::Usage(format!("cannot write {}: {e}", path.display()))
        })?,
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(output.as_bytes())
                .map_err(|e| CliError::Usage(format!("cannot write stdout: {e}")))?;
        }
    }
    Ok(())
}

/// Runs one invocation and returns the process exit status.
pub fn run_command(args: &[String]) -> i32 {
    match dispatch(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Physics(_) => 1,
                CliError::Usage(_) | CliError::Config(_) => 2,
            }
        }
    }
}
