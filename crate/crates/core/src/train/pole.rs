use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::meta::check_env;
use super::{adam_update, behaviour_action, OptimizerState, PoleObjective, TrainConfig};
use crate::envs::{rollout_with_rng, Episode, MultiAgentEnv};
use crate::error::{Error, Result};
use crate::qnn::{argmax, AngleParams, Observation, PoleParams, Qnn};

/// Two selected pole coordinates of one agent at one epoch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub epoch: usize,
    pub agent: usize,
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoleOutcome {
    pub poles: Vec<PoleParams>,
    /// Greedy joint return after each epoch's update.
    pub returns: Vec<f64>,
    pub losses: Vec<f64>,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Each agent's greedy action under its own poles.
pub fn greedy_joint_action(
    qnn: &Qnn,
    phi: &AngleParams,
    poles: &[PoleParams],
    joint_obs: &[Observation],
) -> Result<Vec<usize>> {
    if poles.len() != joint_obs.len() {
        return Err(Error::Size(format!(
            "{} pole sets for {} agents",
            poles.len(),
            joint_obs.len()
        )));
    }
    joint_obs
        .iter()
        .zip(poles)
        .map(|(o, p)| Ok(argmax(&qnn.q_values_all(o, phi, p)?)))
        .collect()
}

/// Plays one episode with every agent acting greedily.
pub fn greedy_rollout(
    qnn: &Qnn,
    env: &mut dyn MultiAgentEnv,
    phi: &AngleParams,
    poles: &[PoleParams],
) -> Result<Episode> {
    if poles.len() != env.num_agents() {
        return Err(Error::Size(format!(
            "{} pole sets for {} agents",
            poles.len(),
            env.num_agents()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    rollout_with_rng(
        env,
        |agent, o, _| {
            argmax(
                &qnn.q_values_all(o, phi, &poles[agent])
                    .expect("validated sizes"),
            )
        },
        &mut rng,
    )
}

/// Default trajectory coordinates: polar angles of the first qubit measured
/// by actions 0 and 1.
pub fn default_probe_coords(qnn: &Qnn) -> [usize; 2] {
    let aq = &qnn.config().action_qubits;
    let first = aq[0][0];
    let second = aq.get(1).map_or(first, |q| q[0]);
    [2 * (first - 1), 2 * (second - 1)]
}

/// Stateful pole trainer, shared by plain and continual training.
pub(crate) struct PoleTrainer<'a> {
    qnn: &'a Qnn,
    phi: &'a AngleParams,
    cfg: &'a TrainConfig,
    pub poles: Vec<PoleParams>,
    poles_target: Vec<PoleParams>,
    opts: Vec<OptimizerState>,
    rng: ChaCha8Rng,
    /// Epochs since the last target sync or reset.
    since_sync: usize,
}

impl<'a> PoleTrainer<'a> {
    pub fn new(
        qnn: &'a Qnn,
        phi: &'a AngleParams,
        cfg: &'a TrainConfig,
        init: Vec<PoleParams>,
    ) -> Result<Self> {
        cfg.validate()?;
        if phi.len() != qnn.config().num_angles() {
            return Err(Error::Size(
                "angle vector length does not match the network".into(),
            ));
        }
        let dim = qnn.config().num_poles();
        if init.iter().any(|p| p.len() != dim) {
            return Err(Error::Size(format!(
                "every pole vector must have {dim} entries"
            )));
        }
        let opts = init
            .iter()
            .map(|_| OptimizerState::new(dim, cfg.pole_learning_rate, cfg.weight_decay))
            .collect();
        Ok(Self {
            qnn,
            phi,
            cfg,
            poles_target: init.clone(),
            poles: init,
            opts,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            since_sync: 0,
        })
    }

    /// Replaces the poles, syncs the target copy, and restarts the optimizers.
    pub fn reload(&mut self, poles: Vec<PoleParams>) {
        self.poles_target = poles.clone();
        self.poles = poles;
        for opt in &mut self.opts {
            opt.reset();
            opt.learning_rate = self.cfg.pole_learning_rate;
        }
        self.since_sync = 0;
    }

    /// One behaviour episode and one Adam step on every agent's poles.
    pub fn epoch(&mut self, env: &mut dyn MultiAgentEnv, progress: (usize, usize)) -> Result<f64> {
        if self.poles.len() != env.num_agents() {
            return Err(Error::Size(format!(
                "{} pole sets for {} agents",
                self.poles.len(),
                env.num_agents()
            )));
        }
        check_env(self.qnn, env)?;
        let eps = self.cfg.epsilon(progress.0, progress.1);
        let (qnn, phi, poles, temp) = (self.qnn, self.phi, &self.poles, self.cfg.temperature);
        let episode = rollout_with_rng(
            env,
            |agent, o, rng| {
                let q = qnn
                    .q_values_all(o, phi, &poles[agent])
                    .expect("validated sizes");
                behaviour_action(&q, temp, eps, rng)
            },
            &mut self.rng,
        )?;
        let objective = PoleObjective::new(self.qnn, self.phi, &episode)?;
        let (loss, grads) = objective.loss_and_grad(&self.poles, &self.poles_target)?;
        if !loss.is_finite() {
            return Err(Error::State("pole loss diverged".into()));
        }
        for ((p, g), opt) in self.poles.iter_mut().zip(&grads).zip(&mut self.opts) {
            adam_update(p.as_mut_slice(), g, opt)?;
        }
        self.since_sync += 1;
        if self.since_sync % self.cfg.target_period == 0 {
            self.poles_target = self.poles.clone();
        }
        Ok(loss)
    }
}

/// Trains every agent's poles with the angles frozen.
pub fn train_pole(
    qnn: &Qnn,
    env: &mut dyn MultiAgentEnv,
    phi: &AngleParams,
    init: Vec<PoleParams>,
    cfg: &TrainConfig,
    probe_coords: Option<[usize; 2]>,
) -> Result<PoleOutcome> {
    if init.len() != env.num_agents() {
        return Err(Error::Size(format!(
            "{} pole sets for {} agents",
            init.len(),
            env.num_agents()
        )));
    }
    let coords = probe_coords.unwrap_or_else(|| default_probe_coords(qnn));
    if coords.iter().any(|&c| c >= qnn.config().num_poles()) {
        return Err(Error::Index(format!(
            "probe coordinates {coords:?} outside the pole vector"
        )));
    }
    let mut trainer = PoleTrainer::new(qnn, phi, cfg, init)?;
    let total = cfg.pole_epochs;
    let mut out = PoleOutcome {
        poles: Vec::new(),
        returns: Vec::with_capacity(total),
        losses: Vec::with_capacity(total),
        trajectory: Vec::with_capacity(total * env.num_agents()),
    };
    for epoch in 0..total {
        let loss = trainer.epoch(env, (epoch, total))?;
        out.losses.push(loss);
        out.returns
            .push(greedy_rollout(qnn, env, phi, &trainer.poles)?.total_return());
        for (agent, p) in trainer.poles.iter().enumerate() {
            out.trajectory.push(TrajectoryPoint {
                epoch,
                agent,
                theta1: p.as_slice()[coords[0]],
                theta2: p.as_slice()[coords[1]],
            });
        }
    }
    out.poles = trainer.poles;
    Ok(out)
}
