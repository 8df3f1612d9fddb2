//! Multi-agent environments with a shared team reward.

mod singlehop;
mod twostep;

pub use singlehop::{SingleHopConfig, SingleHopEnv, StepStats};
pub use twostep::{
    enumerate_trajectories, optimal_q, OpponentModel, QTable, TwoStepEnv, TwoStepState, Variant,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qnn::Observation;

/// One step of joint experience `⟨o, a, r, o′⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub joint_obs: Vec<Observation>,
    pub joint_action: Vec<usize>,
    pub reward: f64,
    pub next_joint_obs: Vec<Observation>,
    pub terminal: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub transitions: Vec<Transition>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Undiscounted sum of rewards.
    pub fn total_return(&self) -> f64 {
        self.transitions.iter().map(|t| t.reward).sum()
    }
}

pub trait MultiAgentEnv {
    fn num_agents(&self) -> usize;
    fn num_actions(&self) -> usize;
    /// Length of each agent's observation vector.
    fn obs_dim(&self) -> usize;
    /// Maximum number of steps per episode.
    fn horizon(&self) -> usize;
    /// Short name used in logs and the pole memory.
    fn label(&self) -> String;
    fn reset(&mut self) -> Vec<Observation>;
    /// Returns the transition and whether the episode has ended.
    fn step(&mut self, joint_action: &[usize]) -> Result<(Transition, bool)>;
}

/// Resets `env` and plays one full episode. `policy(agent, obs, rng)` picks
/// each agent's action; agents are queried in index order.
pub fn rollout_with_rng<E, P>(env: &mut E, mut policy: P, rng: &mut ChaCha8Rng) -> Result<Episode>
where
    E: MultiAgentEnv + ?Sized,
    P: FnMut(usize, &Observation, &mut ChaCha8Rng) -> usize,
{
    let mut obs = env.reset();
    let mut episode = Episode::default();
    for _ in 0..env.horizon() {
        let actions: Vec<usize> = obs
            .iter()
            .enumerate()
            .map(|(n, o)| policy(n, o, rng))
            .collect();
        let (transition, done) = env.step(&actions)?;
        obs = transition.next_joint_obs.clone();
        episode.transitions.push(transition);
        if done {
            break;
        }
    }
    Ok(episode)
}

pub fn rollout<E, P>(env: &mut E, policy: P, seed: u64) -> Result<Episode>
where
    E: MultiAgentEnv + ?Sized,
    P: FnMut(usize, &Observation, &mut ChaCha8Rng) -> usize,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rollout_with_rng(env, policy, &mut rng)
}

/// A policy that picks uniformly among `num_actions` actions.
pub fn uniform_policy(
    num_actions: usize,
) -> impl FnMut(usize, &Observation, &mut ChaCha8Rng) -> usize {
    use rand::Rng;
    move |_, _, rng| rng.gen_range(0..num_actions)
}
