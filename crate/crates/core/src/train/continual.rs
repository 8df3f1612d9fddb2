//! Sequential adaptation across environments, with or without pole memory.

use super::pole::PoleTrainer;
use super::{train_meta, PoleMemoryStore, TrainConfig, META_LABEL};
use crate::analysis::optimal_q_distance;
use crate::envs::{MultiAgentEnv, TwoStepEnv, Variant};
use crate::error::{Error, Result};
use crate::qnn::{AngleParams, PoleParams, Qnn};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceRecord {
    /// Epoch counted across all phases of the arm.
    pub epoch: usize,
    /// Phase number starting at 1.
    pub phase: usize,
    pub distance: f64,
    pub memory_enabled: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinualArm {
    pub memory_enabled: bool,
    pub records: Vec<DistanceRecord>,
    /// Distance right after each phase's initialisation, before training.
    pub phase_start_distances: Vec<f64>,
    pub store: PoleMemoryStore,
    pub final_poles: Vec<PoleParams>,
}

impl ContinualArm {
    /// Epochs into `phase` until the distance first reaches `threshold`;
    /// 0 if it already starts there, the phase length if it never does.
    pub fn epochs_to_threshold(&self, phase: usize, threshold: f64) -> usize {
        if self
            .phase_start_distances
            .get(phase - 1)
            .is_some_and(|&d| d <= threshold)
        {
            return 0;
        }
        let phase_records: Vec<_> = self.records.iter().filter(|r| r.phase == phase).collect();
        phase_records
            .iter()
            .position(|r| r.distance <= threshold)
            .map_or(phase_records.len(), |i| i + 1)
    }
}

/// Runs `schedule` phase by phase. With memory enabled, each phase restarts
/// from the stored poles for its environment (or the meta origin if none is
/// stored yet) with fresh optimizer state; otherwise training simply
/// continues. Each phase's final poles are saved under the environment label.
pub fn fast_remember(
    qnn: &Qnn,
    phi: &AngleParams,
    schedule: &[Variant],
    cfg: &TrainConfig,
    phase_epochs: usize,
    store: &mut PoleMemoryStore,
    memory_enabled: bool,
) -> Result<ContinualArm> {
    let num_agents = TwoStepEnv::NUM_AGENTS;
    let origin = if memory_enabled {
        store.load(META_LABEL)?
    } else {
        vec![PoleParams::zeros(qnn.config().num_qubits); num_agents]
    };
    let mut trainer = PoleTrainer::new(qnn, phi, cfg, origin)?;
    let mut arm = ContinualArm {
        memory_enabled,
        records: Vec::with_capacity(schedule.len() * phase_epochs),
        phase_start_distances: Vec::with_capacity(schedule.len()),
        store: PoleMemoryStore::new(),
        final_poles: Vec::new(),
    };
    let mut epoch = 0;
    for (k, &variant) in schedule.iter().enumerate() {
        let mut env = TwoStepEnv::new(variant).with_obs_dim(qnn.config().num_qubits);
        let label = env.label();
        if memory_enabled {
            let start = if store.contains(&label) {
                store.load(&label)?
            } else {
                store.load(META_LABEL)?
            };
            trainer.reload(start);
        }
        arm.phase_start_distances.push(optimal_q_distance(
            variant,
            cfg.distance_oracle,
            qnn,
            phi,
            &trainer.poles,
        )?);
        for e in 0..phase_epochs {
            trainer.epoch(&mut env, (e, phase_epochs))?;
            arm.records.push(DistanceRecord {
                epoch,
                phase: k + 1,
                distance: optimal_q_distance(
                    variant,
                    cfg.distance_oracle,
                    qnn,
                    phi,
                    &trainer.poles,
                )?,
                memory_enabled,
            });
            epoch += 1;
        }
        store.save(
            &label,
            &trainer.poles,
            &label,
            epoch as u64,
            cfg.alpha_degrees,
        )?;
    }
    arm.store = store.clone();
    arm.final_poles = trainer.poles;
    Ok(arm)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinualOutcome {
    pub phi: AngleParams,
    pub meta_losses: Vec<f64>,
    pub with_memory: ContinualArm,
    pub without_memory: ContinualArm,
    /// Shared threshold: a quarter of the memory-free arm's distance at the
    /// start of the last phase.
    pub threshold: f64,
}

impl ContinualOutcome {
    /// `(with memory, without memory)` epochs to threshold in the last phase.
    pub fn last_phase_epochs(&self) -> (usize, usize) {
        let last = self.with_memory.phase_start_distances.len();
        (
            self.with_memory.epochs_to_threshold(last, self.threshold),
            self.without_memory
                .epochs_to_threshold(last, self.threshold),
        )
    }
}

/// Meta-trains on the union of the schedule's environments, then runs both
/// arms of the schedule from the same angles and seed.
pub fn run_continual(
    qnn: &Qnn,
    cfg: &TrainConfig,
    schedule: &[Variant],
    phase_epochs: usize,
) -> Result<ContinualOutcome> {
    if schedule.is_empty() {
        return Err(Error::Argument("continual schedule is empty".into()));
    }
    let mut distinct: Vec<Variant> = Vec::new();
    for v in schedule {
        if !distinct.contains(v) {
            distinct.push(*v);
        }
    }
    let mut envs: Vec<TwoStepEnv> = distinct
        .iter()
        .map(|&v| TwoStepEnv::new(v).with_obs_dim(qnn.config().num_qubits))
        .collect();
    let mut refs: Vec<&mut dyn MultiAgentEnv> = envs
        .iter_mut()
        .map(|e| e as &mut dyn MultiAgentEnv)
        .collect();
    let meta = train_meta(qnn, &mut refs, cfg, None)?;

    let fresh = || {
        PoleMemoryStore::with_meta(
            TwoStepEnv::NUM_AGENTS,
            qnn.config().num_qubits,
            "meta",
            cfg.meta_epochs as u64,
            cfg.alpha_degrees,
        )
    };
    let with_memory = fast_remember(
        qnn,
        &meta.phi,
        schedule,
        cfg,
        phase_epochs,
        &mut fresh(),
        true,
    )?;
    let without_memory = fast_remember(
        qnn,
        &meta.phi,
        schedule,
        cfg,
        phase_epochs,
        &mut fresh(),
        false,
    )?;
    let threshold = 0.25 * without_memory.phase_start_distances[schedule.len() - 1];
    Ok(ContinualOutcome {
        phi: meta.phi,
        meta_losses: meta.losses,
        with_memory,
        without_memory,
        threshold,
    })
}
