//! Parameter-shift gradients against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{rollout_with_rng, TwoStepEnv, Variant};
use crate::error::Result;
use crate::qnn::{
    central_difference, AngleParams, Observation, ParamDomain, PoleParams, Qnn, QnnConfig,
};
use crate::train::{MetaObjective, MetaSample, NoiseMode, NoiseSpec};

pub const ANGLE_TOL: f64 = 1e-5;
pub const POLE_TOL: f64 = 1e-5;
pub const LOSS_TOL: f64 = 1e-4;
/// Finite-difference step.
pub const FD_STEP: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradcheckReport {
    pub configs: usize,
    pub max_angle_dev: f64,
    pub max_pole_dev: f64,
    pub max_loss_dev: f64,
    pub pass: bool,
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Random two-step networks, observations, actions and episodes. `force_bug`
/// flips the sign of every shift-rule gradient so the check must fail.
pub fn gradcheck_suite(n_configs: usize, seed: u64, force_bug: bool) -> Result<GradcheckReport> {
    let qnn = Qnn::new(QnnConfig::two_step())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sign = if force_bug { -1.0 } else { 1.0 };
    let flip = |g: Vec<f64>| g.into_iter().map(|x| sign * x).collect::<Vec<_>>();
    let noise = NoiseSpec::new(std::f64::consts::FRAC_PI_6, NoiseMode::AllPoleCoords)?;
    let mut env = TwoStepEnv::new(Variant::Main);
    let (mut angle, mut pole, mut loss) = (0.0f64, 0.0f64, 0.0f64);

    for _ in 0..n_configs {
        let phi = AngleParams::random(qnn.config().num_angles(), &mut rng);
        let theta = PoleParams::random(qnn.config().num_qubits, &mut rng);
        let o = Observation::new(
            (0..3)
                .map(|_| rng.gen_range(0.0..std::f64::consts::PI))
                .collect(),
        )?;
        let a = rng.gen_range(0..qnn.num_actions());

        let shift = flip(qnn.grad_angle_shift(&o, a, &phi, &theta)?);
        let fd = qnn.grad_fd(&o, a, &phi, &theta, ParamDomain::Angle, FD_STEP)?;
        angle = angle.max(max_dev(&shift, &fd));

        let shift = flip(qnn.grad_pole_shift(&o, a, &phi, &theta)?);
        let fd = qnn.grad_fd(&o, a, &phi, &theta, ParamDomain::Pole, FD_STEP)?;
        pole = pole.max(max_dev(&shift, &fd));

        let episode = rollout_with_rng(
            &mut env,
            |_, _, r: &mut ChaCha8Rng| r.gen_range(0..2),
            &mut rng,
        )?;
        let draws: Vec<Vec<f64>> = (0..episode.len())
            .map(|_| noise.sample(theta.len(), &mut rng))
            .collect();
        let samples = MetaSample::from_episode(&episode, &draws)?;
        let obj = MetaObjective::new(&qnn, &samples)?;
        let phi_t = AngleParams::random(phi.len(), &mut rng);
        let targets = obj.targets(&phi, &phi_t, &theta)?;
        let (_, g) = obj.grad_with_targets(&phi, &theta, &targets)?;
        let fd = central_difference(phi.as_slice(), FD_STEP, |p| {
            let p = AngleParams::new(p.to_vec()).expect("finite angles");
            obj.loss_with_targets(&p, &theta, &targets)
                .expect("shapes checked")
        });
        loss = loss.max(max_dev(&flip(g), &fd));
    }
    Ok(GradcheckReport {
        configs: n_configs,
        max_angle_dev: angle,
        max_pole_dev: pole,
        max_loss_dev: loss,
        pass: angle <= ANGLE_TOL && pole <= POLE_TOL && loss <= LOSS_TOL,
    })
}
