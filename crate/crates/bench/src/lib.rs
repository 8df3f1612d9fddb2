//! Seeded fixtures shared by the benchmarks in `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qm2arl_core::envs::{rollout_with_rng, uniform_policy};
use qm2arl_core::train::MetaSample;
use qm2arl_core::{AngleParams, Observation, PoleParams, Qnn, QnnConfig, TwoStepEnv, Variant};

pub struct Fixture {
    pub qnn: Qnn,
    pub phi: AngleParams,
    pub theta: PoleParams,
    pub obs: Observation,
    /// One batch of meta samples from a few random two-step episodes.
    pub samples: Vec<MetaSample>,
}

pub fn fixture(config: QnnConfig, seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qnn = Qnn::new(config).expect("valid config");
    let cfg = qnn.config().clone();
    let phi = AngleParams::random(cfg.num_angles(), &mut rng);
    let theta = PoleParams::random(cfg.num_qubits, &mut rng);
    let obs = Observation::new(
        (0..cfg.num_qubits)
            .map(|_| rng.gen_range(0.0..std::f64::consts::PI))
            .collect(),
    )
    .expect("angles in range");
    let mut env = TwoStepEnv::new(Variant::Main).with_obs_dim(cfg.num_qubits);
    let mut samples = Vec::new();
    for _ in 0..4 {
        let ep = rollout_with_rng(&mut env, uniform_policy(2), &mut rng).expect("two-step rollout");
        let noise = vec![vec![0.0; cfg.num_poles()]; ep.len()];
        samples.extend(MetaSample::from_episode(&ep, &noise).expect("noise matches"));
    }
    Fixture {
        qnn,
        phi,
        theta,
        obs,
        samples,
    }
}
