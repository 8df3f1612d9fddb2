mod args;
mod commands;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;
use qm2arl_core::{Error, RunConfig};

use args::{split_overrides, Cli, Command};
use output::OutDir;

/// Exit 1 for bad input, 2 for failures while running or failed checks.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) | Error::Domain(_) | Error::Parse(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QM2ARL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::validation(format!(
            "QM2ARL_THREADS must be a non-negative integer, got {raw:?}"
        ))
    })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    Ok(())
}

fn resolve(cli: &Cli, mut overrides: Vec<(String, String)>) -> Result<RunConfig, CliError> {
    let file = match &cli.global.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::validation(format!("config: cannot read {}: {e}", p.display()))
            })?;
            Some(
                serde_json::from_str::<serde_json::Value>(&text)
                    .map_err(|e| CliError::validation(format!("config: {}: {e}", p.display())))?,
            )
        }
        None => None,
    };
    if let Some(s) = cli.global.seed {
        overrides.push(("seed".into(), s.to_string()));
    }
    if let Some(a) = cli.global.alpha {
        overrides.push(("alpha_degrees".into(), a.to_string()));
    }
    if let Some(o) = &cli.global.out {
        let dir = o
            .to_str()
            .ok_or_else(|| CliError::validation("out: path is not valid UTF-8"))?;
        overrides.push((
            "output_dir".into(),
            serde_json::to_string(dir).expect("string serialises"),
        ));
    }
    Ok(RunConfig::resolve(file.as_ref(), &overrides)?)
}

fn run(cli: Cli, overrides: Vec<(String, String)>) -> Result<bool, CliError> {
    configure_threads()?;
    let cfg = resolve(&cli, overrides)?;
    let mut out = OutDir::create(cfg.output_dir.as_ref())?;
    match &cli.command {
        Command::TrainMeta => commands::train_meta_cmd(&cfg, &mut out).map(|_| true),
        Command::TrainPole {
            model,
            memory,
            label,
        } => commands::train_pole_cmd(&cfg, &mut out, model, memory.as_ref(), label).map(|_| true),
        Command::Continual => commands::continual_cmd(&cfg, &mut out).map(|_| true),
        Command::Probe {
            model,
            memory,
            label,
            state,
            agent,
        } => commands::probe_cmd(&cfg, &mut out, model, memory.as_ref(), label, state, *agent)
            .map(|_| true),
        Command::Verify => commands::verify_cmd(&cfg, &mut out),
        Command::Gradcheck { force_bug } => commands::gradcheck_cmd(&cfg, &mut out, *force_bug),
    }
}

fn main() -> ExitCode {
    let (argv, overrides) = split_overrides(std::env::args_os().collect());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, overrides) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: one or more checks failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
