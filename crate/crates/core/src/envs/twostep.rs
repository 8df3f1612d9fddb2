//! Two-agent, two-step cooperative matrix game.
//!
//! The episode starts at `s1`, where only agent 1's action matters: action 0
//! leads to `s2`, action 1 to `s3`. The second step pays the joint-action
//! entry of that state's table and terminates.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{MultiAgentEnv, Transition};
use crate::error::{Error, Result};
use crate::qnn::Observation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Main,
    EnvA,
    EnvB,
}

impl Variant {
    pub fn s2_payoff(self) -> f64 {
        match self {
            Variant::Main => 7.0,
            Variant::EnvA | Variant::EnvB => 4.0,
        }
    }

    /// `s3[a1][a2]`.
    pub fn s3_table(self) -> [[f64; 2]; 2] {
        match self {
            Variant::Main | Variant::EnvA => [[0.0, 1.0], [1.0, 8.0]],
            Variant::EnvB => [[8.0, 1.0], [1.0, 1.0]],
        }
    }

    /// Payoff table of a state; `s1` pays nothing.
    pub fn table(self, state: TwoStepState) -> [[f64; 2]; 2] {
        match state {
            TwoStepState::S1 | TwoStepState::Done => [[0.0; 2]; 2],
            TwoStepState::S2 => [[self.s2_payoff(); 2]; 2],
            TwoStepState::S3 => self.s3_table(),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Main => "main",
            Variant::EnvA => "env-a",
            Variant::EnvB => "env-b",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "main" => Ok(Variant::Main),
            "env-a" | "enva" | "a" => Ok(Variant::EnvA),
            "env-b" | "envb" | "b" => Ok(Variant::EnvB),
            other => Err(Error::Parse(format!("unknown two-step variant '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TwoStepState {
    S1,
    S2,
    S3,
    Done,
}

impl TwoStepState {
    /// Row index in a [`QTable`]; `None` for the terminal state.
    pub fn index(self) -> Option<usize> {
        match self {
            TwoStepState::S1 => Some(0),
            TwoStepState::S2 => Some(1),
            TwoStepState::S3 => Some(2),
            TwoStepState::Done => None,
        }
    }

    pub const PLAYABLE: [TwoStepState; 3] = [TwoStepState::S1, TwoStepState::S2, TwoStepState::S3];
}

#[derive(Clone, Debug)]
pub struct TwoStepEnv {
    variant: Variant,
    state: TwoStepState,
    step_index: usize,
    obs_dim: usize,
}

impl TwoStepEnv {
    pub const NUM_AGENTS: usize = 2;

    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            state: TwoStepState::S1,
            step_index: 0,
            obs_dim: 3,
        }
    }

    /// Pads (with zeros) or truncates observations to `dim` angles.
    pub fn with_obs_dim(mut self, dim: usize) -> Self {
        self.obs_dim = dim;
        self
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn state(&self) -> TwoStepState {
        self.state
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    /// Encoding angles `(state, agent id, step)`: state `s1, s2, s3` maps to
    /// `0, π/2, π`, agent id to `0, π`, step to `step · π/2` (capped at `π`).
    pub fn observation_for(
        &self,
        state: TwoStepState,
        agent: usize,
        step_index: usize,
    ) -> Observation {
        let state_angle = match state {
            TwoStepState::S1 => 0.0,
            TwoStepState::S2 => FRAC_PI_2,
            TwoStepState::S3 | TwoStepState::Done => PI,
        };
        let agent_angle = if agent == 0 { 0.0 } else { PI };
        let step_angle = (step_index as f64 * FRAC_PI_2).min(PI);
        let mut angles = vec![state_angle, agent_angle, step_angle];
        angles.resize(self.obs_dim, 0.0);
        Observation::new(angles).expect("encoding angles lie in [0, pi]")
    }

    /// Joint observation for a given state at its natural step index.
    pub fn joint_observation(&self, state: TwoStepState) -> Vec<Observation> {
        let step = match state {
            TwoStepState::S1 => 0,
            TwoStepState::S2 | TwoStepState::S3 => 1,
            TwoStepState::Done => 2,
        };
        (0..Self::NUM_AGENTS)
            .map(|n| self.observation_for(state, n, step))
            .collect()
    }

    fn current_obs(&self) -> Vec<Observation> {
        (0..Self::NUM_AGENTS)
            .map(|n| self.observation_for(self.state, n, self.step_index))
            .collect()
    }
}

impl MultiAgentEnv for TwoStepEnv {
    fn num_agents(&self) -> usize {
        Self::NUM_AGENTS
    }

    fn num_actions(&self) -> usize {
        2
    }

    fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    fn horizon(&self) -> usize {
        2
    }

    fn label(&self) -> String {
        self.variant.to_string()
    }

    fn reset(&mut self) -> Vec<Observation> {
        self.state = TwoStepState::S1;
        self.step_index = 0;
        self.current_obs()
    }

    fn step(&mut self, joint_action: &[usize]) -> Result<(Transition, bool)> {
        if self.state == TwoStepState::Done {
            return Err(Error::State(
                "step called on a finished two-step episode".into(),
            ));
        }
        if joint_action.len() != Self::NUM_AGENTS {
            return Err(Error::Size(format!(
                "expected 2 actions, got {}",
                joint_action.len()
            )));
        }
        if let Some(&bad) = joint_action.iter().find(|&&a| a > 1) {
            return Err(Error::UnknownAction(bad));
        }
        let obs = self.current_obs();
        let (a1, a2) = (joint_action[0], joint_action[1]);
        let reward = self.variant.table(self.state)[a1][a2];
        self.state = match self.state {
            TwoStepState::S1 if a1 == 0 => TwoStepState::S2,
            TwoStepState::S1 => TwoStepState::S3,
            _ => TwoStepState::Done,
        };
        self.step_index += 1;
        let done = self.state == TwoStepState::Done;
        let transition = Transition {
            joint_obs: obs,
            joint_action: joint_action.to_vec(),
            reward,
            next_joint_obs: self.current_obs(),
            terminal: done,
        };
        Ok((transition, done))
    }
}

/// How the other agent is assumed to behave when computing `Q*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OpponentModel {
    /// The partner picks uniformly at random at every step.
    UniformRandom,
    /// The partner always picks the action best for the team.
    BestResponse,
}

/// `Q*(s, a)` from agent 1's perspective, rows `s1, s2, s3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    pub values: [[f64; 2]; 3],
}

impl QTable {
    pub fn get(&self, state: TwoStepState, action: usize) -> f64 {
        self.values[state.index().expect("playable state")][action]
    }

    pub fn max(&self, state: TwoStepState) -> f64 {
        let row = self.values[state.index().expect("playable state")];
        row[0].max(row[1])
    }

    /// Set of maximizing actions (both when tied).
    pub fn argmax_set(&self, state: TwoStepState) -> Vec<usize> {
        let row = self.values[state.index().expect("playable state")];
        let best = row[0].max(row[1]);
        (0..2).filter(|&a| row[a] == best).collect()
    }
}

/// Exact `Q*` by dynamic programming over the two-step tree, discount 1.
/// Agent 1 always plays greedily on its own values; `model` fixes agent 2.
pub fn optimal_q(variant: Variant, model: OpponentModel) -> QTable {
    let leaf = |state: TwoStepState, a1: usize| -> f64 {
        let row = variant.table(state)[a1];
        match model {
            OpponentModel::UniformRandom => 0.5 * (row[0] + row[1]),
            OpponentModel::BestResponse => row[0].max(row[1]),
        }
    };
    let s2 = [leaf(TwoStepState::S2, 0), leaf(TwoStepState::S2, 1)];
    let s3 = [leaf(TwoStepState::S3, 0), leaf(TwoStepState::S3, 1)];
    let s1 = [s2[0].max(s2[1]), s3[0].max(s3[1])];
    QTable {
        values: [s1, s2, s3],
    }
}

/// Every joint trajectory of the tree as `(s1 joint action, second joint
/// action, return)`: 16 entries, four per distinct agent-1 route and payoff cell.
pub fn enumerate_trajectories(variant: Variant) -> Vec<([usize; 2], [usize; 2], f64)> {
    let mut out = Vec::with_capacity(16);
    let mut env = TwoStepEnv::new(variant);
    for first in [[0, 0], [0, 1], [1, 0], [1, 1]] {
        for second in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            env.reset();
            let (t1, _) = env.step(&first).expect("valid action");
            let (t2, _) = env.step(&second).expect("valid action");
            out.push((first, second, t1.reward + t2.reward));
        }
    }
    out
}
