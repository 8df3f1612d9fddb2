//! Meta angle training, local pole training, and continual adaptation.

mod adam;
mod continual;
mod memory;
mod meta;
mod noise;
mod objective;
mod pole;

pub use adam::{adam_update, OptimizerState};
pub use continual::{fast_remember, run_continual, ContinualArm, ContinualOutcome, DistanceRecord};
pub use memory::{PoleMemoryEntry, PoleMemoryStore, FORMAT_VERSION, META_LABEL};
pub use meta::{train_meta, MetaOutcome};
pub use noise::{sample_pole_noise, NoiseMode, NoiseSpec};
pub use objective::{
    meta_loss_grad, meta_td_loss, pole_td_loss, MetaObjective, MetaSample, PoleObjective,
    META_AGENT,
};
pub use pole::{
    default_probe_coords, greedy_joint_action, greedy_rollout, train_pole, PoleOutcome,
    TrajectoryPoint,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::OpponentModel;
use crate::error::{Error, Result};
use crate::qnn::softmax;

/// Hyperparameters shared by the training loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub meta_epochs: usize,
    pub pole_epochs: usize,
    /// Epochs between target-network syncs.
    pub target_period: usize,
    /// Adam step size for the angles.
    pub learning_rate: f64,
    /// Adam step size for the poles.
    pub pole_learning_rate: f64,
    pub weight_decay: f64,
    /// Pole-noise bound in degrees.
    pub alpha_degrees: f64,
    pub noise_mode: NoiseMode,
    pub temperature: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the run over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    /// Angles start uniform in `[-init_scale·π, init_scale·π]`.
    pub init_scale: f64,
    /// Oracle the continual distance is measured against.
    pub distance_oracle: OpponentModel,
    /// Disables the epsilon floor.
    pub strict_paper_mode: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            meta_epochs: 3000,
            pole_epochs: 20000,
            target_period: 50,
            learning_rate: 1e-4,
            pole_learning_rate: 1e-4,
            weight_decay: 1e-5,
            alpha_degrees: 30.0,
            noise_mode: NoiseMode::AllPoleCoords,
            temperature: 1.0,
            epsilon_start: 0.3,
            epsilon_end: 0.01,
            epsilon_decay_fraction: 0.5,
            init_scale: 1.0,
            distance_oracle: OpponentModel::UniformRandom,
            strict_paper_mode: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_period == 0 {
            return Err(Error::Argument("target_period must be positive".into()));
        }
        if !(0.0..=180.0).contains(&self.alpha_degrees) {
            return Err(Error::Domain(format!(
                "alpha_degrees must be in [0, 180], got {}",
                self.alpha_degrees
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Domain(format!(
                "learning_rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        if !(self.pole_learning_rate >= 0.0 && self.pole_learning_rate.is_finite()) {
            return Err(Error::Domain(format!(
                "pole_learning_rate must be non-negative, got {}",
                self.pole_learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Domain(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Domain(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        for (name, e) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_end", self.epsilon_end),
        ] {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::Domain(format!("{name} must be in [0, 1], got {e}")));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return Err(Error::Domain(
                "epsilon_decay_fraction must be in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.init_scale) {
            return Err(Error::Domain(format!(
                "init_scale must be in [0, 1], got {}",
                self.init_scale
            )));
        }
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseSpec> {
        NoiseSpec::from_degrees(self.alpha_degrees, self.noise_mode)
    }

    /// Exploration floor at `epoch` of `total`.
    pub fn epsilon(&self, epoch: usize, total: usize) -> f64 {
        if self.strict_paper_mode {
            return 0.0;
        }
        let horizon = self.epsilon_decay_fraction * total as f64;
        if horizon <= 0.0 || epoch as f64 >= horizon {
            return self.epsilon_end;
        }
        let frac = epoch as f64 / horizon;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }
}

/// Samples from `softmax(q / temperature)`, replaced by a uniform draw with probability `epsilon`.
pub(crate) fn behaviour_action<R: Rng + ?Sized>(
    q: &[f64],
    temperature: f64,
    epsilon: f64,
    rng: &mut R,
) -> usize {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        return rng.gen_range(0..q.len());
    }
    let probs = softmax(q, temperature).expect("temperature validated");
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (a, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return a;
        }
    }
    q.len() - 1
}
