use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    adam_update, behaviour_action, MetaObjective, MetaSample, OptimizerState, TrainConfig,
    META_AGENT,
};
use crate::envs::{rollout_with_rng, MultiAgentEnv};
use crate::error::{Error, Result};
use crate::qnn::{AngleParams, PoleParams, Qnn};

#[derive(Clone, Debug, PartialEq)]
pub struct MetaOutcome {
    pub phi: AngleParams,
    /// Loss of each epoch, evaluated before that epoch's update.
    pub losses: Vec<f64>,
}

pub(crate) fn check_env(qnn: &Qnn, env: &dyn MultiAgentEnv) -> Result<()> {
    if env.obs_dim() != qnn.config().num_qubits {
        return Err(Error::Size(format!(
            "environment '{}' emits {}-angle observations, network has {} qubits",
            env.label(),
            env.obs_dim(),
            qnn.config().num_qubits
        )));
    }
    if env.num_actions() != qnn.num_actions() {
        return Err(Error::Size(format!(
            "environment '{}' has {} actions, network has {}",
            env.label(),
            env.num_actions(),
            qnn.num_actions()
        )));
    }
    Ok(())
}

/// Trains the angle parameters with the poles pinned at the origin. Every
/// epoch plays one episode per environment (agent 0 follows the noisy meta
/// network, the others act uniformly at random) and takes one Adam step on
/// the union of those episodes.
pub fn train_meta(
    qnn: &Qnn,
    envs: &mut [&mut dyn MultiAgentEnv],
    cfg: &TrainConfig,
    phi0: Option<AngleParams>,
) -> Result<MetaOutcome> {
    cfg.validate()?;
    if envs.is_empty() {
        return Err(Error::Argument(
            "meta training needs at least one environment".into(),
        ));
    }
    for env in envs.iter() {
        check_env(qnn, &**env)?;
    }
    let noise = cfg.noise()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_angles = qnn.config().num_angles();
    let mut phi = match phi0 {
        Some(p) if p.len() != n_angles => {
            return Err(Error::Size(format!(
                "initial angles have {} entries, expected {n_angles}",
                p.len()
            )))
        }
        Some(p) => p,
        None => {
            let scale = cfg.init_scale;
            AngleParams::new(
                (0..n_angles)
                    .map(|_| scale * rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                    .collect(),
            )?
        }
    };
    let mut phi_target = phi.clone();
    let theta = PoleParams::zeros(qnn.config().num_qubits);
    let mut opt = OptimizerState::new(n_angles, cfg.learning_rate, cfg.weight_decay);
    let mut losses = Vec::with_capacity(cfg.meta_epochs);
    let dim = qnn.config().num_poles();
    let beta = qnn.beta();

    for epoch in 0..cfg.meta_epochs {
        let eps = cfg.epsilon(epoch, cfg.meta_epochs);
        let mut samples = Vec::new();
        for env in envs.iter_mut() {
            let mut noises: Vec<Vec<f64>> = Vec::new();
            let n_actions = env.num_actions();
            let episode = rollout_with_rng(
                &mut **env,
                |agent, o, rng| {
                    if agent != META_AGENT {
                        return rng.gen_range(0..n_actions);
                    }
                    let th = noise.sample(dim, rng);
                    let noisy: Vec<f64> = theta
                        .as_slice()
                        .iter()
                        .zip(&th)
                        .map(|(a, b)| a + b)
                        .collect();
                    let state = qnn.output_state_raw(o.angles(), phi.as_slice());
                    let q: Vec<f64> = qnn
                        .expectations_on_state(&state, &noisy)
                        .into_iter()
                        .map(|e| beta * e)
                        .collect();
                    noises.push(th);
                    behaviour_action(&q, cfg.temperature, eps, rng)
                },
                &mut rng,
            )?;
            samples.extend(MetaSample::from_episode(&episode, &noises)?);
        }
        let objective = MetaObjective::new(qnn, &samples)?;
        let (loss, grad) = objective.loss_and_grad(&phi, &phi_target, &theta)?;
        if !loss.is_finite() {
            return Err(Error::State(format!("meta loss diverged at epoch {epoch}")));
        }
        losses.push(loss);
        adam_update(phi.as_mut_slice(), &grad, &mut opt)?;
        if (epoch + 1) % cfg.target_period == 0 {
            phi_target = phi.clone();
        }
    }
    Ok(MetaOutcome { phi, losses })
}
