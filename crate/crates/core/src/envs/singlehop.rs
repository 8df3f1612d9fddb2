//! Single-hop offloading: four edge agents push chunks from their own queue to
//! one of two cloud queues. The team is rewarded for keeping every queue near
//! its target level.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{MultiAgentEnv, Transition};
use crate::error::{Error, Result};
use crate::qnn::Observation;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleHopConfig {
    pub num_agents: usize,
    pub num_clouds: usize,
    /// Chunks arriving at each edge queue per step.
    pub arrival_rate: f64,
    /// Chunks each cloud processes per step.
    pub drain_rate: f64,
    pub small_chunk: f64,
    pub large_chunk: f64,
    pub q_target: f64,
    pub q_max: f64,
    pub horizon: usize,
}

impl Default for SingleHopConfig {
    fn default() -> Self {
        Self {
            num_agents: 4,
            num_clouds: 2,
            arrival_rate: 2.0,
            drain_rate: 4.0,
            small_chunk: 1.0,
            large_chunk: 3.0,
            q_target: 10.0,
            q_max: 20.0,
            horizon: 10,
        }
    }
}

impl SingleHopConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_agents == 0 || self.num_clouds != 2 {
            return Err(Error::Argument(
                "single-hop needs at least one agent and exactly two clouds".into(),
            ));
        }
        for (name, v) in [
            ("arrival_rate", self.arrival_rate),
            ("drain_rate", self.drain_rate),
            ("small_chunk", self.small_chunk),
            ("large_chunk", self.large_chunk),
            ("q_target", self.q_target),
            ("q_max", self.q_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if self.q_target > self.q_max {
            return Err(Error::Domain("q_target must not exceed q_max".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Argument("horizon must be at least 1".into()));
        }
        Ok(())
    }
}

/// Flow accounting for the most recent step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub arrivals: f64,
    pub drained: f64,
    /// Chunks removed by the `q_max` cap.
    pub clamped: f64,
    pub clamp_events: usize,
}

#[derive(Clone, Debug)]
pub struct SingleHopEnv {
    config: SingleHopConfig,
    edge: Vec<f64>,
    prev_edge: Vec<f64>,
    cloud: Vec<f64>,
    step_index: usize,
    last_stats: StepStats,
    total_clamp_events: usize,
}

impl SingleHopEnv {
    pub const NUM_ACTIONS: usize = 4;

    pub fn new(config: SingleHopConfig) -> Result<Self> {
        config.validate()?;
        let mut env = Self {
            edge: Vec::new(),
            prev_edge: Vec::new(),
            cloud: Vec::new(),
            step_index: 0,
            last_stats: StepStats::default(),
            total_clamp_events: 0,
            config,
        };
        env.reset();
        Ok(env)
    }

    pub fn config(&self) -> &SingleHopConfig {
        &self.config
    }

    pub fn edge_queues(&self) -> &[f64] {
        &self.edge
    }

    pub fn cloud_queues(&self) -> &[f64] {
        &self.cloud
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn last_stats(&self) -> StepStats {
        self.last_stats
    }

    pub fn total_clamp_events(&self) -> usize {
        self.total_clamp_events
    }

    /// Total chunks held in all queues.
    pub fn total_chunks(&self) -> f64 {
        self.edge.iter().sum::<f64>() + self.cloud.iter().sum::<f64>()
    }

    /// Sets queue levels directly (for probes and tests).
    pub fn set_queues(&mut self, edge: &[f64], cloud: &[f64]) -> Result<()> {
        if edge.len() != self.config.num_agents || cloud.len() != self.config.num_clouds {
            return Err(Error::Size(
                "queue vector lengths do not match the configuration".into(),
            ));
        }
        if edge
            .iter()
            .chain(cloud)
            .any(|&q| !(0.0..=self.config.q_max).contains(&q))
        {
            return Err(Error::Domain(format!(
                "queue levels must be in [0, {}]",
                self.config.q_max
            )));
        }
        self.prev_edge = self.edge.clone();
        self.edge = edge.to_vec();
        self.cloud = cloud.to_vec();
        Ok(())
    }

    /// Full state: concatenated per-agent observations.
    pub fn state_vector(&self) -> Vec<f64> {
        self.observe()
            .iter()
            .flat_map(|o| o.angles().to_vec())
            .collect()
    }

    /// Decodes an action into `(chunk size, cloud index)`.
    pub fn decode_action(&self, a: usize) -> Result<(f64, usize)> {
        if a >= Self::NUM_ACTIONS {
            return Err(Error::Domain(format!(
                "single-hop action {a} outside [0, 4)"
            )));
        }
        let chunk = if a < 2 {
            self.config.small_chunk
        } else {
            self.config.large_chunk
        };
        Ok((chunk, a % 2))
    }

    /// `-Σ |q - q_target| / q_target` over edge and cloud queues.
    pub fn reward(&self) -> f64 {
        let t = self.config.q_target;
        -self
            .edge
            .iter()
            .chain(&self.cloud)
            .map(|q| (q - t).abs() / t)
            .sum::<f64>()
    }

    fn scale(&self, q: f64) -> f64 {
        (q / self.config.q_max * PI).clamp(0.0, PI)
    }

    fn observe(&self) -> Vec<Observation> {
        (0..self.config.num_agents)
            .map(|n| {
                Observation::new(vec![
                    self.scale(self.edge[n]),
                    self.scale(self.prev_edge[n]),
                    self.scale(self.cloud[0]),
                    self.scale(self.cloud[1]),
                ])
                .expect("scaled queues lie in [0, pi]")
            })
            .collect()
    }
}

impl MultiAgentEnv for SingleHopEnv {
    fn num_agents(&self) -> usize {
        self.config.num_agents
    }

    fn num_actions(&self) -> usize {
        Self::NUM_ACTIONS
    }

    fn obs_dim(&self) -> usize {
        4
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn label(&self) -> String {
        "single-hop".into()
    }

    fn reset(&mut self) -> Vec<Observation> {
        let t = self.config.q_target;
        self.edge = vec![t; self.config.num_agents];
        self.prev_edge = self.edge.clone();
        self.cloud = vec![t; self.config.num_clouds];
        self.step_index = 0;
        self.last_stats = StepStats::default();
        self.observe()
    }

    fn step(&mut self, joint_action: &[usize]) -> Result<(Transition, bool)> {
        if self.step_index >= self.config.horizon {
            return Err(Error::State("step called after the horizon".into()));
        }
        if joint_action.len() != self.config.num_agents {
            return Err(Error::Size(format!(
                "expected {} actions, got {}",
                self.config.num_agents,
                joint_action.len()
            )));
        }
        let decoded = joint_action
            .iter()
            .map(|&a| self.decode_action(a))
            .collect::<Result<Vec<_>>>()?;
        let obs = self.observe();
        self.prev_edge = self.edge.clone();

        for (n, (chunk, cloud)) in decoded.into_iter().enumerate() {
            let moved = chunk.min(self.edge[n]);
            self.edge[n] -= moved;
            self.cloud[cloud] += moved;
        }
        let arrivals = self.config.arrival_rate * self.config.num_agents as f64;
        for q in &mut self.edge {
            *q += self.config.arrival_rate;
        }
        let mut drained = 0.0;
        for c in &mut self.cloud {
            let d = self.config.drain_rate.min(*c);
            *c -= d;
            drained += d;
        }
        let mut stats = StepStats {
            arrivals,
            drained,
            ..StepStats::default()
        };
        for q in self.edge.iter_mut().chain(self.cloud.iter_mut()) {
            if *q > self.config.q_max {
                stats.clamped += *q - self.config.q_max;
                stats.clamp_events += 1;
                *q = self.config.q_max;
            }
        }
        self.total_clamp_events += stats.clamp_events;
        self.last_stats = stats;
        self.step_index += 1;
        let done = self.step_index >= self.config.horizon;
        let transition = Transition {
            joint_obs: obs,
            joint_action: joint_action.to_vec(),
            reward: self.reward(),
            next_joint_obs: self.observe(),
            terminal: done,
        };
        Ok((transition, done))
    }
}
