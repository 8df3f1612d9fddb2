//! Quantum multi-agent meta reinforcement learning on a statevector simulator.
//!
//! A QNN carries two parameter sets: rotation angles `φ` inside the circuit
//! and measurement poles `θ` that tilt each measured qubit's Z observable.
//! Angles are meta-trained with uniform noise on the poles; poles are then
//! trained per agent with the angles frozen and can be stored and reloaded
//! cheaply.

pub mod analysis;
pub mod config;
pub mod envs;
pub mod error;
pub mod qcore;
pub mod qnn;
pub mod train;

pub use analysis::{
    d_norm, gradcheck_suite, lemma1_check, lemma3_check, optimal_q_distance, pole_grid_probe,
    GradcheckReport, Lemma3Report, LemmaReport, PoleGrid,
};
pub use config::{EnvKind, RunConfig};
pub use envs::{
    optimal_q, Episode, MultiAgentEnv, OpponentModel, QTable, SingleHopConfig, SingleHopEnv,
    Transition, TwoStepEnv, TwoStepState, Variant,
};
pub use error::{Error, Result};
pub use qcore::{Axis, Gate2x2, Statevector, C64};
pub use qnn::{AngleParams, Observation, ParamDomain, PoleParams, Qnn, QnnConfig};
pub use train::{
    fast_remember, run_continual, train_meta, train_pole, ContinualOutcome, MetaOutcome, NoiseMode,
    NoiseSpec, PoleMemoryStore, PoleOutcome, TrainConfig,
};
