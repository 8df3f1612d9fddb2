use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use qm2arl_core::envs::{rollout_with_rng, uniform_policy};
use qm2arl_core::train::{default_probe_coords, greedy_rollout, MetaSample};
use qm2arl_core::{
    gradcheck_suite, lemma1_check, lemma3_check, optimal_q, pole_grid_probe, run_continual,
    train_meta, train_pole, AngleParams, EnvKind, MultiAgentEnv, Observation, OpponentModel,
    PoleMemoryStore, PoleParams, Qnn, QnnConfig, RunConfig, TwoStepEnv, TwoStepState, Variant,
};

use crate::output::OutDir;
use crate::CliError;

/// Angles and shape written by `train-meta` and read by later commands.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub env: EnvKind,
    pub qnn: QnnConfig,
    pub phi: AngleParams,
    pub seed: u64,
    pub alpha_degrees: f64,
    pub meta_epochs: usize,
}

fn state_name(s: TwoStepState) -> &'static str {
    match s {
        TwoStepState::S1 => "s1",
        TwoStepState::S2 => "s2",
        TwoStepState::S3 => "s3",
        TwoStepState::Done => "done",
    }
}

fn manifest(
    out: &mut OutDir,
    command: &str,
    cfg: &RunConfig,
    extra: serde_json::Value,
) -> Result<(), CliError> {
    let mut files = out.files().to_vec();
    files.push("manifest.json".into());
    let m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.train.seed,
        "config": cfg,
        "files": files,
        "summary": extra,
    });
    out.write_json("manifest.json", &m)
}

fn mem_path(model: &Path, memory: Option<&PathBuf>) -> PathBuf {
    memory
        .cloned()
        .unwrap_or_else(|| model.with_file_name("model.mem"))
}

fn load_model(
    cfg: &RunConfig,
    model: &Path,
    memory: Option<&PathBuf>,
) -> Result<(ModelFile, PoleMemoryStore), CliError> {
    let text = std::fs::read_to_string(model)
        .map_err(|e| CliError::runtime(format!("cannot read model {}: {e}", model.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::runtime(format!("model {}: {e}", model.display())))?;
    let wanted = cfg.qnn_config()?;
    if file.qnn.num_qubits != wanted.num_qubits || file.qnn.action_qubits != wanted.action_qubits {
        return Err(CliError::runtime(format!(
            "model has {} qubits and {} actions, {} needs {} and {}",
            file.qnn.num_qubits,
            file.qnn.action_qubits.len(),
            cfg.env,
            wanted.num_qubits,
            wanted.action_qubits.len()
        )));
    }
    let path = mem_path(model, memory);
    let store = PoleMemoryStore::read_file(&path)
        .map_err(|e| CliError::runtime(format!("pole memory {}: {e}", path.display())))?;
    Ok((file, store))
}

fn memory_poles(
    store: &PoleMemoryStore,
    label: &str,
    agents: usize,
    qnn: &Qnn,
) -> Result<Vec<PoleParams>, CliError> {
    let poles = store.load(label)?;
    if poles.len() != agents || poles.iter().any(|p| p.len() != qnn.config().num_poles()) {
        return Err(CliError::runtime(format!(
            "memory entry {label:?} holds {} pole sets that do not fit {agents} agents",
            poles.len()
        )));
    }
    Ok(poles)
}

pub fn train_meta_cmd(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    let qnn = Qnn::new(cfg.qnn_config()?)?;
    let mut env = cfg.make_env()?;
    let meta = train_meta(&qnn, &mut [env.as_mut()], &cfg.train, None)?;
    out.write_csv(
        "loss.csv",
        &["epoch", "loss"],
        meta.losses.iter().enumerate(),
    )?;

    let zeros = PoleParams::zeros(qnn.config().num_qubits);
    let mut rows = Vec::new();
    match cfg.env.variant() {
        Some(v) => {
            let probe = TwoStepEnv::new(v).with_obs_dim(qnn.config().num_qubits);
            let truth = optimal_q(v, OpponentModel::UniformRandom);
            for s in TwoStepState::PLAYABLE {
                let o = &probe.joint_observation(s)[0];
                for (a, q) in qnn
                    .q_values_all(o, &meta.phi, &zeros)?
                    .into_iter()
                    .enumerate()
                {
                    rows.push((state_name(s).to_string(), a, q, Some(truth.get(s, a))));
                }
            }
        }
        None => {
            let o = &env.reset()[0];
            for (a, q) in qnn
                .q_values_all(o, &meta.phi, &zeros)?
                .into_iter()
                .enumerate()
            {
                rows.push(("reset".to_string(), a, q, None));
            }
        }
    }
    out.write_csv("qtable.csv", &["state", "action", "q", "q_optimal"], rows)?;

    let model = ModelFile {
        env: cfg.env,
        qnn: qnn.config().clone(),
        phi: meta.phi,
        seed: cfg.train.seed,
        alpha_degrees: cfg.train.alpha_degrees,
        meta_epochs: cfg.train.meta_epochs,
    };
    out.write_json("model.json", &model)?;
    let store = PoleMemoryStore::with_meta(
        env.num_agents(),
        qnn.config().num_qubits,
        &cfg.env.to_string(),
        cfg.train.meta_epochs as u64,
        cfg.train.alpha_degrees,
    );
    out.write_bytes("model.mem", store.to_json()?.as_bytes())?;
    let tail = meta.losses.len().div_ceil(10);
    let tail_mean = meta.losses[meta.losses.len() - tail..].iter().sum::<f64>() / tail as f64;
    println!(
        "train-meta: {} epochs, final-10% mean loss {tail_mean:.4}",
        meta.losses.len()
    );
    manifest(out, "train-meta", cfg, json!({ "tail_loss": tail_mean }))
}

pub fn train_pole_cmd(
    cfg: &RunConfig,
    out: &mut OutDir,
    model: &Path,
    memory: Option<&PathBuf>,
    label: &str,
) -> Result<(), CliError> {
    let qnn = Qnn::new(cfg.qnn_config()?)?;
    let mut env = cfg.make_env()?;
    let (file, mut store) = load_model(cfg, model, memory)?;
    let qnn = if file.qnn == *qnn.config() {
        qnn
    } else {
        Qnn::new(file.qnn.clone())?
    };
    let init = memory_poles(&store, label, env.num_agents(), &qnn)?;
    let outcome = train_pole(&qnn, env.as_mut(), &file.phi, init, &cfg.train, None)?;
    out.write_csv(
        "return.csv",
        &["epoch", "return", "loss"],
        outcome
            .returns
            .iter()
            .zip(&outcome.losses)
            .enumerate()
            .map(|(e, (r, l))| (e, r, l)),
    )?;
    out.write_csv(
        "pole_trajectory.csv",
        &["epoch", "agent", "theta1", "theta2"],
        outcome
            .trajectory
            .iter()
            .map(|p| (p.epoch, p.agent, p.theta1, p.theta2)),
    )?;
    let env_label = cfg.env.to_string();
    store.save(
        &env_label,
        &outcome.poles,
        &env_label,
        cfg.train.pole_epochs as u64,
        cfg.train.alpha_degrees,
    )?;
    out.write_bytes("model.mem", store.to_json()?.as_bytes())?;
    let greedy = greedy_rollout(&qnn, env.as_mut(), &file.phi, &outcome.poles)?.total_return();
    println!(
        "train-pole: {} epochs, final greedy return {greedy}",
        outcome.returns.len()
    );
    manifest(
        out,
        "train-pole",
        cfg,
        json!({ "final_greedy_return": greedy, "saved_label": env_label }),
    )
}

pub fn continual_cmd(cfg: &RunConfig, out: &mut OutDir) -> Result<(), CliError> {
    if cfg.env == EnvKind::SingleHop {
        return Err(CliError::validation(
            "env: continual runs on the two-step variants",
        ));
    }
    let qnn = Qnn::new(cfg.qnn_config()?)?;
    let train = qm2arl_core::TrainConfig {
        meta_epochs: cfg.continual_meta_epochs,
        ..cfg.train.clone()
    };
    let schedule = [Variant::EnvA, Variant::EnvB, Variant::EnvA];
    let res = run_continual(&qnn, &train, &schedule, cfg.phase_epochs)?;
    let rows = res
        .with_memory
        .records
        .iter()
        .chain(&res.without_memory.records)
        .map(|r| (r.epoch, r.phase, r.distance, r.memory_enabled));
    out.write_csv(
        "distance.csv",
        &["epoch", "phase", "distance", "memory_enabled"],
        rows,
    )?;
    let (with, without) = res.last_phase_epochs();
    println!(
        "continual: threshold {:.4}, last-phase epochs to threshold: memory {with}, no memory {without}",
        res.threshold
    );
    manifest(
        out,
        "continual",
        cfg,
        json!({
            "threshold": res.threshold,
            "epochs_to_threshold_memory": with,
            "epochs_to_threshold_no_memory": without,
            "phase_start_distances_memory": res.with_memory.phase_start_distances,
            "phase_start_distances_no_memory": res.without_memory.phase_start_distances,
        }),
    )
}

/// Observation of `agent` at a named state: `s1`..`s3` on two-step, `reset` on single-hop.
fn probe_observation(
    cfg: &RunConfig,
    env: &mut dyn MultiAgentEnv,
    state: &str,
    agent: usize,
) -> Option<Observation> {
    match cfg.env.variant() {
        Some(v) => {
            let s = TwoStepState::PLAYABLE
                .into_iter()
                .find(|&s| state_name(s) == state)?;
            Some(
                TwoStepEnv::new(v)
                    .with_obs_dim(cfg.qubits)
                    .joint_observation(s)
                    .swap_remove(agent),
            )
        }
        None if state == "reset" => Some(env.reset().swap_remove(agent)),
        None => None,
    }
}

pub fn probe_cmd(
    cfg: &RunConfig,
    out: &mut OutDir,
    model: &Path,
    memory: Option<&PathBuf>,
    label: &str,
    state: &str,
    agent: usize,
) -> Result<(), CliError> {
    let qnn = Qnn::new(cfg.qnn_config()?)?;
    let mut env = cfg.make_env()?;
    if agent >= env.num_agents() {
        return Err(CliError::validation(format!(
            "agent: {agent} outside [0, {})",
            env.num_agents()
        )));
    }
    let o = probe_observation(cfg, env.as_mut(), state, agent).ok_or_else(|| {
        let valid = if cfg.env.variant().is_some() {
            "s1, s2 or s3"
        } else {
            "reset"
        };
        CliError::validation(format!(
            "state: unknown state label {state:?} for env {}; expected {valid}",
            cfg.env
        ))
    })?;
    let (file, store) = load_model(cfg, model, memory)?;
    let poles = memory_poles(&store, label, env.num_agents(), &qnn)?;
    let coords = default_probe_coords(&qnn);
    let grid = pole_grid_probe(&qnn, &file.phi, &poles[agent], &o, coords, state)?;
    out.write_csv("polegrid.csv", &["theta1", "theta2", "qmax"], grid.rows())?;
    println!(
        "probe: {} grid points at {state} over pole coordinates {coords:?}",
        grid.rows().count()
    );
    manifest(
        out,
        "probe",
        cfg,
        json!({ "state": state, "agent": agent, "label": label, "coords": coords }),
    )
}

pub fn verify_cmd(cfg: &RunConfig, out: &mut OutDir) -> Result<bool, CliError> {
    let qnn = Qnn::new(QnnConfig::two_step())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.train.seed);
    let mut reports = Vec::new();
    let mut all = true;
    let mut rows = Vec::new();
    for deg in [30.0f64, 45.0, 60.0, 90.0] {
        let alpha = deg.to_radians();
        let phi = AngleParams::random(45, &mut rng);
        let theta = PoleParams::random(3, &mut rng);
        let o = Observation::new((0..3).map(|_| rng.gen_range(0.0..PI)).collect())?;
        let a = rng.gen_range(0..2);
        let r = lemma1_check(&qnn, &phi, &theta, alpha, &o, a, cfg.samples, &mut rng)?;
        println!(
            "lemma1 alpha={deg}deg factor={:.4} mc={:.6} predicted={:.6} se={:.2e} {}",
            r.factor(),
            r.monte_carlo_estimate,
            r.analytic_prediction,
            r.standard_error,
            if r.pass { "PASS" } else { "FAIL" }
        );
        all &= r.pass;
        rows.push((
            "lemma1",
            deg,
            r.monte_carlo_estimate,
            r.analytic_prediction,
            r.standard_error,
            r.pass,
        ));
        reports.push(serde_json::to_value(&r).expect("report serialises"));
    }
    let phi = AngleParams::random(45, &mut rng);
    let phi_t = AngleParams::random(45, &mut rng);
    let theta = PoleParams::random(3, &mut rng);
    let mut env = TwoStepEnv::new(Variant::Main);
    let episode = rollout_with_rng(&mut env, uniform_policy(2), &mut rng)?;
    let samples = MetaSample::from_episode(&episode, &vec![vec![0.0; 6]; episode.len()])?;
    let k = rng.gen_range(0..45);
    let r = lemma3_check(
        &qnn,
        &phi,
        &phi_t,
        &theta,
        60f64.to_radians(),
        &samples,
        k,
        cfg.samples,
        &mut rng,
    )?;
    println!(
        "lemma3 alpha=60deg k={k} variance={:.6} bound={:.6} se={:.2e} {}",
        r.variance,
        r.bound,
        r.standard_error,
        if r.pass { "PASS" } else { "FAIL" }
    );
    all &= r.pass;
    rows.push((
        "lemma3",
        60.0,
        r.variance,
        r.bound,
        r.standard_error,
        r.pass,
    ));
    reports.push(serde_json::to_value(&r).expect("report serialises"));
    out.write_csv(
        "verify.csv",
        &[
            "check",
            "alpha_degrees",
            "estimate",
            "reference",
            "standard_error",
            "pass",
        ],
        rows,
    )?;
    manifest(
        out,
        "verify",
        cfg,
        json!({ "reports": reports, "pass": all }),
    )?;
    Ok(all)
}

pub fn gradcheck_cmd(cfg: &RunConfig, out: &mut OutDir, force_bug: bool) -> Result<bool, CliError> {
    let r = gradcheck_suite(cfg.gradcheck_configs, cfg.train.seed, force_bug)?;
    println!("gradcheck: {} configs", r.configs);
    println!("  angle max deviation {:.3e} (tol 1e-5)", r.max_angle_dev);
    println!("  pole  max deviation {:.3e} (tol 1e-5)", r.max_pole_dev);
    println!("  loss  max deviation {:.3e} (tol 1e-4)", r.max_loss_dev);
    println!("{}", if r.pass { "PASS" } else { "FAIL" });
    manifest(
        out,
        "gradcheck",
        cfg,
        json!({ "report": r, "force_bug": force_bug }),
    )?;
    Ok(r.pass)
}
