use crate::envs::{optimal_q, OpponentModel, TwoStepEnv, TwoStepState, Variant};
use crate::error::Result;
use crate::qnn::{AngleParams, PoleParams, Qnn};
use crate::train::greedy_joint_action;

/// Per-state breakdown of [`optimal_q_distance`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateDistance {
    pub state: TwoStepState,
    pub greedy_action: [usize; 2],
    /// `Q_tot` at the greedy joint action: the mean of the agents' Q values.
    pub q_tot: f64,
    pub optimal: f64,
    /// `max Q* − Q*(s, greedy action)`.
    pub regret: f64,
}

impl StateDistance {
    pub fn term(&self) -> f64 {
        (self.optimal - self.q_tot).abs() + self.regret
    }
}

/// Per-state terms of the optimal-Q distance on the two-step game.
pub fn optimal_q_distance_terms(
    variant: Variant,
    model: OpponentModel,
    qnn: &Qnn,
    phi: &AngleParams,
    poles: &[PoleParams],
) -> Result<Vec<StateDistance>> {
    let env = TwoStepEnv::new(variant).with_obs_dim(qnn.config().num_qubits);
    let q_star = optimal_q(variant, model);
    TwoStepState::PLAYABLE
        .iter()
        .map(|&state| {
            let obs = env.joint_observation(state);
            let a = greedy_joint_action(qnn, phi, poles, &obs)?;
            let mut q_tot = 0.0;
            for (n, o) in obs.iter().enumerate() {
                q_tot += qnn.q_value(o, a[n], phi, &poles[n])?;
            }
            q_tot /= obs.len() as f64;
            let achieved = match (state, model) {
                (TwoStepState::S1, _) | (_, OpponentModel::UniformRandom) => {
                    q_star.get(state, a[0])
                }
                (_, OpponentModel::BestResponse) => variant.table(state)[a[0]][a[1]],
            };
            let optimal = q_star.max(state);
            Ok(StateDistance {
                state,
                greedy_action: [a[0], a[1]],
                q_tot,
                optimal,
                regret: optimal - achieved,
            })
        })
        .collect()
}

/// `Σ_s |max Q*(s) − Q_tot(s, a_g)| + (max Q*(s) − Q*(s, a_g))` over the
/// three playable states, where `a_g` is the greedy joint action and `Q*` the
/// oracle for `model`. Under the uniform model `Q*(s, a_g)` is taken at agent
/// 1's action; under best response at the full joint action. Zero iff the
/// greedy action is optimal and its value estimate is exact everywhere.
pub fn optimal_q_distance(
    variant: Variant,
    model: OpponentModel,
    qnn: &Qnn,
    phi: &AngleParams,
    poles: &[PoleParams],
) -> Result<f64> {
    Ok(optimal_q_distance_terms(variant, model, qnn, phi, poles)?
        .iter()
        .map(StateDistance::term)
        .sum())
}
