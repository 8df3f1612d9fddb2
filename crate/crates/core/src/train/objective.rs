//! TD losses and their analytic gradients.
//!
//! Meta loss (agent 0 only, angles trained):
//! `mean [r + Q(o′, a*; φ′, θ) − Q(o, a; φ, θ + θ̃)]²` with
//! `a* = argmax_a Q(o′, a; φ, θ)` and no bootstrap on terminal steps.
//!
//! Pole loss (all agents, poles trained, `φ` frozen):
//! `mean [r + (1/N) Σ_n (max_a Q(o′ⁿ, a; θ′ⁿ) − Q(oⁿ, aⁿ; θⁿ))]²`.

use rayon::prelude::*;

use crate::envs::Episode;
use crate::error::{Error, Result};
use crate::qcore::Statevector;
use crate::qnn::{argmax, AngleParams, Observation, PoleParams, Qnn};

/// The agent whose experience trains the meta network.
pub const META_AGENT: usize = 0;

/// A meta-agent transition together with the pole noise drawn when it was collected.
#[derive(Clone, Debug, PartialEq)]
pub struct MetaSample {
    pub obs: Observation,
    pub action: usize,
    pub reward: f64,
    pub next_obs: Observation,
    pub terminal: bool,
    pub noise: Vec<f64>,
}

impl MetaSample {
    /// Pairs each transition of `episode` with its noise vector.
    pub fn from_episode(episode: &Episode, noise: &[Vec<f64>]) -> Result<Vec<MetaSample>> {
        if episode.is_empty() {
            return Err(Error::Argument("episode is empty".into()));
        }
        if noise.len() != episode.len() {
            return Err(Error::Size(format!(
                "{} noise vectors for {} transitions",
                noise.len(),
                episode.len()
            )));
        }
        Ok(episode
            .transitions
            .iter()
            .zip(noise)
            .map(|(t, n)| MetaSample {
                obs: t.joint_obs[META_AGENT].clone(),
                action: t.joint_action[META_AGENT],
                reward: t.reward,
                next_obs: t.next_joint_obs[META_AGENT].clone(),
                terminal: t.terminal,
                noise: n.clone(),
            })
            .collect())
    }
}

fn noisy(theta: &[f64], noise: &[f64]) -> Vec<f64> {
    theta.iter().zip(noise).map(|(t, n)| t + n).collect()
}

/// Meta-loss evaluator over a fixed batch of samples.
pub struct MetaObjective<'a> {
    qnn: &'a Qnn,
    samples: &'a [MetaSample],
}

impl<'a> MetaObjective<'a> {
    pub fn new(qnn: &'a Qnn, samples: &'a [MetaSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("episode is empty".into()));
        }
        let cfg = qnn.config();
        for s in samples {
            if s.obs.len() != cfg.num_qubits || s.next_obs.len() != cfg.num_qubits {
                return Err(Error::Size(
                    "observation length does not match the qubit count".into(),
                ));
            }
            if s.noise.len() != cfg.num_poles() {
                return Err(Error::Size(format!(
                    "noise vector has {} entries, expected {}",
                    s.noise.len(),
                    cfg.num_poles()
                )));
            }
            if s.action >= cfg.num_actions() {
                return Err(Error::UnknownAction(s.action));
            }
        }
        Ok(Self { qnn, samples })
    }

    fn check(&self, phi: &[f64], theta: &[f64]) -> Result<()> {
        let cfg = self.qnn.config();
        if phi.len() != cfg.num_angles() || theta.len() != cfg.num_poles() {
            return Err(Error::Size(
                "parameter vector length does not match the network".into(),
            ));
        }
        Ok(())
    }

    /// TD targets `r + Q(o′, a*; φ′, θ)` with the double-Q action rule.
    pub fn targets(
        &self,
        phi: &AngleParams,
        phi_target: &AngleParams,
        theta: &PoleParams,
    ) -> Result<Vec<f64>> {
        self.check(phi.as_slice(), theta.as_slice())?;
        self.check(phi_target.as_slice(), theta.as_slice())?;
        let (phi, phi_t, theta) = (phi.as_slice(), phi_target.as_slice(), theta.as_slice());
        Ok(self
            .samples
            .par_iter()
            .map(|s| {
                if s.terminal {
                    return s.reward;
                }
                let online = self.qnn.output_state_raw(s.next_obs.angles(), phi);
                let a_star = argmax(&self.qnn.q_values_on_state(&online, theta));
                let target = self.qnn.output_state_raw(s.next_obs.angles(), phi_t);
                s.reward + self.qnn.beta() * self.qnn.expectation_on_state(&target, a_star, theta)
            })
            .collect())
    }

    /// Per-sample residuals `y − Q(o, a; φ, θ + θ̃)` for given targets.
    pub fn residuals(
        &self,
        phi: &AngleParams,
        theta: &PoleParams,
        targets: &[f64],
    ) -> Result<Vec<f64>> {
        self.check(phi.as_slice(), theta.as_slice())?;
        if targets.len() != self.samples.len() {
            return Err(Error::Size("one target per sample is required".into()));
        }
        let beta = self.qnn.beta();
        Ok(self
            .samples
            .par_iter()
            .zip(targets)
            .map(|(s, y)| {
                let th = noisy(theta.as_slice(), &s.noise);
                y - beta
                    * self
                        .qnn
                        .expectation_raw(s.obs.angles(), s.action, phi.as_slice(), &th)
            })
            .collect())
    }

    pub fn loss_with_targets(
        &self,
        phi: &AngleParams,
        theta: &PoleParams,
        targets: &[f64],
    ) -> Result<f64> {
        let res = self.residuals(phi, theta, targets)?;
        Ok(res.iter().map(|d| d * d).sum::<f64>() / res.len() as f64)
    }

    pub fn loss(
        &self,
        phi: &AngleParams,
        phi_target: &AngleParams,
        theta: &PoleParams,
    ) -> Result<f64> {
        let targets = self.targets(phi, phi_target, theta)?;
        self.loss_with_targets(phi, theta, &targets)
    }

    /// Gradient with the targets (and hence `a*`) held fixed:
    /// `−(2β² / |E|) Σ A₁ ∇⟨O_a⟩` with `A₁ = residual / β`.
    pub fn grad_with_targets(
        &self,
        phi: &AngleParams,
        theta: &PoleParams,
        targets: &[f64],
    ) -> Result<(f64, Vec<f64>)> {
        let res = self.residuals(phi, theta, targets)?;
        let n = res.len() as f64;
        let beta = self.qnn.beta();
        let per_sample: Vec<Vec<f64>> = self
            .samples
            .par_iter()
            .map(|s| {
                let th = noisy(theta.as_slice(), &s.noise);
                self.qnn
                    .grad_angle_shift_raw(s.obs.angles(), s.action, phi.as_slice(), &th)
            })
            .collect();
        // Summed in sample order so the result does not depend on scheduling.
        let mut grad = vec![0.0; phi.len()];
        for (inner, d) in per_sample.iter().zip(&res) {
            let a1 = d / beta;
            for (g, x) in grad.iter_mut().zip(inner) {
                *g -= 2.0 * beta * beta / n * a1 * x;
            }
        }
        let loss = res.iter().map(|d| d * d).sum::<f64>() / n;
        Ok((loss, grad))
    }

    /// Loss and gradient at the current parameters.
    pub fn loss_and_grad(
        &self,
        phi: &AngleParams,
        phi_target: &AngleParams,
        theta: &PoleParams,
    ) -> Result<(f64, Vec<f64>)> {
        let targets = self.targets(phi, phi_target, theta)?;
        self.grad_with_targets(phi, theta, &targets)
    }
}

pub fn meta_td_loss(
    qnn: &Qnn,
    phi: &AngleParams,
    phi_target: &AngleParams,
    theta: &PoleParams,
    noise: &[Vec<f64>],
    episode: &Episode,
) -> Result<f64> {
    let samples = MetaSample::from_episode(episode, noise)?;
    MetaObjective::new(qnn, &samples)?.loss(phi, phi_target, theta)
}

pub fn meta_loss_grad(
    qnn: &Qnn,
    phi: &AngleParams,
    phi_target: &AngleParams,
    theta: &PoleParams,
    noise: &[Vec<f64>],
    episode: &Episode,
) -> Result<Vec<f64>> {
    let samples = MetaSample::from_episode(episode, noise)?;
    Ok(MetaObjective::new(qnn, &samples)?
        .loss_and_grad(phi, phi_target, theta)?
        .1)
}

/// Pole-loss evaluator. Output states only depend on the frozen angles, so
/// they are prepared once per batch.
pub struct PoleObjective<'a> {
    qnn: &'a Qnn,
    episode: &'a Episode,
    states: Vec<Vec<Statevector>>,
    next_states: Vec<Vec<Statevector>>,
}

impl<'a> PoleObjective<'a> {
    pub fn new(qnn: &'a Qnn, phi: &AngleParams, episode: &'a Episode) -> Result<Self> {
        if episode.is_empty() {
            return Err(Error::Argument("episode is empty".into()));
        }
        if phi.len() != qnn.config().num_angles() {
            return Err(Error::Size(
                "angle vector length does not match the network".into(),
            ));
        }
        let prepare = |obs: &[Observation]| -> Result<Vec<Statevector>> {
            obs.iter().map(|o| qnn.output_state(o, phi)).collect()
        };
        let states = episode
            .transitions
            .iter()
            .map(|t| prepare(&t.joint_obs))
            .collect::<Result<Vec<_>>>()?;
        let next_states = episode
            .transitions
            .iter()
            .map(|t| prepare(&t.next_joint_obs))
            .collect::<Result<Vec<_>>>()?;
        for t in &episode.transitions {
            if let Some(&a) = t.joint_action.iter().find(|&&a| a >= qnn.num_actions()) {
                return Err(Error::UnknownAction(a));
            }
        }
        Ok(Self {
            qnn,
            episode,
            states,
            next_states,
        })
    }

    fn num_agents(&self) -> usize {
        self.episode.transitions[0].joint_action.len()
    }

    fn check(&self, poles: &[PoleParams], poles_target: &[PoleParams]) -> Result<()> {
        let n = self.num_agents();
        if poles.len() != n || poles_target.len() != n {
            return Err(Error::Size(format!(
                "{} agents in the episode, {} online and {} target pole sets",
                n,
                poles.len(),
                poles_target.len()
            )));
        }
        let dim = self.qnn.config().num_poles();
        if poles.iter().chain(poles_target).any(|p| p.len() != dim) {
            return Err(Error::Size(format!(
                "every pole vector must have {dim} entries"
            )));
        }
        Ok(())
    }

    pub fn residuals(&self, poles: &[PoleParams], poles_target: &[PoleParams]) -> Result<Vec<f64>> {
        self.check(poles, poles_target)?;
        let n = self.num_agents() as f64;
        let beta = self.qnn.beta();
        Ok(self
            .episode
            .transitions
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut spread = 0.0;
                for agent in 0..t.joint_action.len() {
                    let boot = if t.terminal {
                        0.0
                    } else {
                        let q = self.qnn.q_values_on_state(
                            &self.next_states[i][agent],
                            poles_target[agent].as_slice(),
                        );
                        q.into_iter().fold(f64::NEG_INFINITY, f64::max)
                    };
                    let q = beta
                        * self.qnn.expectation_on_state(
                            &self.states[i][agent],
                            t.joint_action[agent],
                            poles[agent].as_slice(),
                        );
                    spread += boot - q;
                }
                t.reward + spread / n
            })
            .collect())
    }

    pub fn loss(&self, poles: &[PoleParams], poles_target: &[PoleParams]) -> Result<f64> {
        let res = self.residuals(poles, poles_target)?;
        Ok(res.iter().map(|d| d * d).sum::<f64>() / res.len() as f64)
    }

    /// Loss and per-agent gradients with respect to the online poles.
    pub fn loss_and_grad(
        &self,
        poles: &[PoleParams],
        poles_target: &[PoleParams],
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        let res = self.residuals(poles, poles_target)?;
        let count = res.len() as f64;
        let n = self.num_agents() as f64;
        let beta = self.qnn.beta();
        let mut grads = vec![vec![0.0; self.qnn.config().num_poles()]; poles.len()];
        for (i, t) in self.episode.transitions.iter().enumerate() {
            for (agent, grad) in grads.iter_mut().enumerate() {
                let inner = self.qnn.grad_pole_on_state(
                    &self.states[i][agent],
                    t.joint_action[agent],
                    poles[agent].as_slice(),
                );
                for (g, x) in grad.iter_mut().zip(inner) {
                    *g -= 2.0 / count * res[i] * beta / n * x;
                }
            }
        }
        let loss = res.iter().map(|d| d * d).sum::<f64>() / count;
        Ok((loss, grads))
    }
}

pub fn pole_td_loss(
    qnn: &Qnn,
    poles: &[PoleParams],
    poles_target: &[PoleParams],
    phi: &AngleParams,
    episode: &Episode,
) -> Result<f64> {
    PoleObjective::new(qnn, phi, episode)?.loss(poles, poles_target)
}
