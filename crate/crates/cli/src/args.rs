use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qm2arl_core::RunConfig;

/// Quantum multi-agent meta RL: training runs, probes and numeric checks.
///
/// Any config key can also be set with `--<key> <value>` (underscores or
/// dashes); flags win over the config file.
#[derive(Debug, Parser)]
#[command(name = "qm2arl", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Pole-noise bound in degrees.
    #[arg(long, global = true, value_name = "DEGREES")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Meta-train the angles with noisy poles.
    TrainMeta,
    /// Train each agent's poles with the angles frozen.
    TrainPole {
        /// `model.json` written by train-meta.
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Pole memory file (defaults to `model.mem` next to the model).
        #[arg(long, value_name = "PATH")]
        memory: Option<PathBuf>,
        /// Memory label to start from.
        #[arg(long, default_value = "meta")]
        label: String,
    },
    /// Env A, Env B, Env A with and without pole memory.
    Continual,
    /// Max-Q landscape over two pole coordinates.
    Probe {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_name = "PATH")]
        memory: Option<PathBuf>,
        #[arg(long, default_value = "meta")]
        label: String,
        /// Two-step state: s1, s2 or s3.
        #[arg(long, default_value = "s1")]
        state: String,
        /// Agent whose poles are probed.
        #[arg(long, default_value_t = 0)]
        agent: usize,
    },
    /// Monte Carlo checks of the noise contraction and the variance bound.
    Verify,
    /// Shift-rule gradients against finite differences.
    Gradcheck {
        /// Flip the shift-rule sign so the check must fail.
        #[arg(long)]
        force_bug: bool,
    },
}

/// Splits `--<config key> <value>` pairs out of `argv`. Flags clap declares
/// itself are left in place.
pub fn split_overrides(argv: Vec<OsString>) -> (Vec<OsString>, Vec<(String, String)>) {
    let keys: Vec<String> = RunConfig::keys()
        .into_iter()
        .filter(|k| k != "seed")
        .collect();
    let mut rest = Vec::with_capacity(argv.len());
    let mut overrides = Vec::new();
    let mut it = argv.into_iter().peekable();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.to_str().and_then(|s| s.strip_prefix("--")) else {
            rest.push(arg);
            continue;
        };
        let (name, inline) = match flag.split_once('=') {
            Some((n, v)) => (n.to_string(), Some(v.to_string())),
            None => (flag.to_string(), None),
        };
        let key = name.replace('-', "_");
        if !keys.contains(&key) {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => Some(v),
            None => it
                .next_if(|v| v.to_str().is_some())
                .and_then(|v| v.into_string().ok()),
        };
        match value {
            Some(v) => overrides.push((key, v)),
            None => rest.push(arg),
        }
    }
    (rest, overrides)
}
