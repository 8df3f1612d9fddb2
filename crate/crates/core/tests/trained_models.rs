//! Checks that need a meta-trained model. Runs are short but real.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qm2arl_core::analysis::{grid_axis, GRID_POINTS};
use qm2arl_core::{
    optimal_q, optimal_q_distance, pole_grid_probe, train_meta, AngleParams, OpponentModel,
    PoleParams, Qnn, QnnConfig, TrainConfig, TwoStepEnv, TwoStepState, Variant,
};

fn trained(variant: Variant, seed: u64, alpha_degrees: f64) -> (Qnn, AngleParams) {
    let qnn = Qnn::new(QnnConfig::two_step()).unwrap();
    let cfg = TrainConfig {
        meta_epochs: 2000,
        learning_rate: 1e-2,
        alpha_degrees,
        seed,
        ..TrainConfig::default()
    };
    let mut env = TwoStepEnv::new(variant);
    let out = train_meta(&qnn, &mut [&mut env], &cfg, None).unwrap();
    (qnn, out.phi)
}

#[test]
fn env_a_model_is_closer_to_its_own_oracle() {
    let poles = vec![PoleParams::zeros(3); 2];
    let (mut own, mut other) = (0.0, 0.0);
    for seed in 0..3 {
        let (qnn, phi) = trained(Variant::EnvA, seed, 30.0);
        let m = OpponentModel::UniformRandom;
        own += optimal_q_distance(Variant::EnvA, m, &qnn, &phi, &poles).unwrap();
        other += optimal_q_distance(Variant::EnvB, m, &qnn, &phi, &poles).unwrap();
    }
    assert!(other > own, "EnvB distance {other} vs EnvA {own}");
}

#[test]
fn distance_is_nonnegative_for_untrained_models() {
    let qnn = Qnn::new(QnnConfig::two_step()).unwrap();
    let poles = vec![PoleParams::zeros(3); 2];
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = AngleParams::random(45, &mut rng);
        for v in [Variant::Main, Variant::EnvA, Variant::EnvB] {
            for m in [OpponentModel::UniformRandom, OpponentModel::BestResponse] {
                assert!(optimal_q_distance(v, m, &qnn, &phi, &poles).unwrap() >= 0.0);
            }
        }
    }
}

#[test]
fn trained_pole_origin_beats_grid_average() {
    let (qnn, phi) = trained(Variant::Main, 0, 0.0);
    let env = TwoStepEnv::new(Variant::Main);
    let obs = &env.joint_observation(TwoStepState::S1)[0];
    let q_star = optimal_q(Variant::Main, OpponentModel::UniformRandom).max(TwoStepState::S1);
    let grid = pole_grid_probe(&qnn, &phi, &PoleParams::zeros(3), obs, [0, 1], "s1").unwrap();
    let d: Vec<f64> = grid
        .values
        .iter()
        .flatten()
        .map(|q| (q_star - q).abs())
        .collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let centre = grid_axis().len() / 2;
    let at_origin = d[centre * GRID_POINTS + centre];
    assert!(at_origin <= mean, "origin {at_origin} vs mean {mean}");
}
