//! Run configuration: defaults, a JSON file, then `key=value` overrides.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::envs::{MultiAgentEnv, SingleHopConfig, SingleHopEnv, TwoStepEnv, Variant};
use crate::error::{Error, Result};
use crate::qnn::{QnnConfig, DEFAULT_BETA};
use crate::train::TrainConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvKind {
    #[serde(rename = "twostep-main")]
    TwoStepMain,
    #[serde(rename = "twostep-a")]
    TwoStepA,
    #[serde(rename = "twostep-b")]
    TwoStepB,
    #[serde(rename = "singlehop")]
    SingleHop,
}

impl EnvKind {
    pub fn variant(self) -> Option<Variant> {
        match self {
            EnvKind::TwoStepMain => Some(Variant::Main),
            EnvKind::TwoStepA => Some(Variant::EnvA),
            EnvKind::TwoStepB => Some(Variant::EnvB),
            EnvKind::SingleHop => None,
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvKind::TwoStepMain => "twostep-main",
            EnvKind::TwoStepA => "twostep-a",
            EnvKind::TwoStepB => "twostep-b",
            EnvKind::SingleHop => "singlehop",
        })
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_string()))
            .map_err(|_| Error::Parse(format!("env: unknown environment {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub env: EnvKind,
    pub qubits: usize,
    pub depth: usize,
    pub beta: f64,
    #[serde(flatten)]
    pub train: TrainConfig,
    /// Meta epochs before the continual schedule starts.
    pub continual_meta_epochs: usize,
    /// Pole epochs per continual phase.
    pub phase_epochs: usize,
    /// Monte Carlo samples per lemma check.
    pub samples: usize,
    /// Random configurations per gradient check.
    pub gradcheck_configs: usize,
    pub output_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::TwoStepMain,
            qubits: 3,
            depth: 5,
            beta: DEFAULT_BETA,
            train: TrainConfig::default(),
            continual_meta_epochs: 5000,
            phase_epochs: 10000,
            samples: 200_000,
            gradcheck_configs: 100,
            output_dir: "out".into(),
        }
    }
}

impl RunConfig {
    /// Defaults for `env`: the single-hop network uses four qubits and depth four.
    pub fn for_env(env: EnvKind) -> Self {
        let mut cfg = Self {
            env,
            ..Self::default()
        };
        if env == EnvKind::SingleHop {
            cfg.qubits = 4;
            cfg.depth = 4;
        }
        cfg
    }

    /// Every key a file or override may set.
    pub fn keys() -> Vec<String> {
        match serde_json::to_value(Self::default()) {
            Ok(Value::Object(m)) => m.keys().cloned().collect(),
            _ => unreachable!("RunConfig serialises to an object"),
        }
    }

    /// Applies a JSON object of settings, then `(key, value)` overrides, on top
    /// of the defaults. Override values are parsed as JSON when possible and
    /// taken as strings otherwise.
    pub fn resolve(file: Option<&Value>, overrides: &[(String, String)]) -> Result<Self> {
        let env = overrides
            .iter()
            .rev()
            .find(|(k, _)| k == "env")
            .map(|(_, v)| v.clone())
            .or_else(|| {
                file.and_then(|f| f.get("env"))
                    .and_then(|v| v.as_str())
                    .map(str::to_string)
            });
        let base = match env {
            Some(e) => Self::for_env(e.parse()?),
            None => Self::default(),
        };
        let mut tree = match serde_json::to_value(base) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("RunConfig serialises to an object"),
        };
        if let Some(f) = file {
            let obj = f
                .as_object()
                .ok_or_else(|| Error::Parse("config file must hold a JSON object".into()))?;
            merge(&mut tree, obj)?;
        }
        for (k, v) in overrides {
            let key = k.replace('-', "_");
            let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.clone()));
            let mut one = Map::new();
            one.insert(key, value);
            merge(&mut tree, &one)?;
        }
        let cfg: Self =
            serde_json::from_value(Value::Object(tree.clone())).map_err(|e| blame(&tree, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, n) in [
            ("qubits", self.qubits),
            ("depth", self.depth),
            ("meta_epochs", self.train.meta_epochs),
            ("pole_epochs", self.train.pole_epochs),
            ("target_period", self.train.target_period),
            ("continual_meta_epochs", self.continual_meta_epochs),
            ("phase_epochs", self.phase_epochs),
            ("samples", self.samples),
            ("gradcheck_configs", self.gradcheck_configs),
        ] {
            if n == 0 {
                return Err(Error::Argument(format!("{name} must be positive")));
            }
        }
        if self.samples < 2 {
            return Err(Error::Argument("samples must be at least 2".into()));
        }
        let min_qubits = if self.env == EnvKind::SingleHop { 4 } else { 3 };
        if self.qubits < min_qubits {
            return Err(Error::Argument(format!(
                "qubits must be at least {min_qubits} for {}",
                self.env
            )));
        }
        if self.env == EnvKind::SingleHop && self.qubits != 4 {
            return Err(Error::Argument("qubits must equal 4 for singlehop".into()));
        }
        if self.output_dir.is_empty() {
            return Err(Error::Argument("output_dir must not be empty".into()));
        }
        self.train.validate()?;
        self.qnn_config()?;
        Ok(())
    }

    pub fn qnn_config(&self) -> Result<QnnConfig> {
        let action_qubits = match self.env {
            EnvKind::SingleHop => (1..=4).map(|q| vec![q]).collect(),
            _ => vec![vec![2], vec![3]],
        };
        QnnConfig::new(self.qubits, self.depth, self.beta, action_qubits)
            .map_err(|e| Error::Argument(format!("qubits/depth/beta: {e}")))
    }

    pub fn make_env(&self) -> Result<Box<dyn MultiAgentEnv>> {
        Ok(match self.env.variant() {
            Some(v) => Box::new(TwoStepEnv::new(v).with_obs_dim(self.qubits)),
            None if self.qubits == 4 => Box::new(SingleHopEnv::new(SingleHopConfig::default())?),
            None => return Err(Error::Argument("qubits must equal 4 for singlehop".into())),
        })
    }
}

/// Names the first key whose value alone breaks deserialisation.
fn blame(tree: &Map<String, Value>, err: serde_json::Error) -> Error {
    let defaults = match serde_json::to_value(RunConfig::default()) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("RunConfig serialises to an object"),
    };
    for (k, v) in tree {
        let mut probe = defaults.clone();
        probe.insert(k.clone(), v.clone());
        if let Err(e) = serde_json::from_value::<RunConfig>(Value::Object(probe)) {
            return Error::Parse(format!("{k}: {e}"));
        }
    }
    Error::Parse(err.to_string())
}

fn merge(tree: &mut Map<String, Value>, update: &Map<String, Value>) -> Result<()> {
    for (k, v) in update {
        if !tree.contains_key(k) {
            return Err(Error::Argument(format!("unknown config key {k:?}")));
        }
        tree.insert(k.clone(), v.clone());
    }
    Ok(())
}
