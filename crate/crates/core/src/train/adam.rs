use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnn::wrap_angle;

/// Adam with decoupled weight decay.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerState {
    pub fn new(len: usize, learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Clears moments and step count, keeping hyperparameters.
    pub fn reset(&mut self) {
        self.first_moment.iter_mut().for_each(|m| *m = 0.0);
        self.second_moment.iter_mut().for_each(|v| *v = 0.0);
        self.step_count = 0;
    }
}

/// One Adam step on angle parameters, wrapping the result to `(-π, π]`.
pub fn adam_update(params: &mut [f64], grads: &[f64], opt: &mut OptimizerState) -> Result<()> {
    if params.len() != grads.len() || params.len() != opt.first_moment.len() {
        return Err(Error::Size(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            opt.first_moment.len()
        )));
    }
    opt.step_count += 1;
    let t = opt.step_count as i32;
    let bc1 = 1.0 - opt.beta1.powi(t);
    let bc2 = 1.0 - opt.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        opt.first_moment[i] = opt.beta1 * opt.first_moment[i] + (1.0 - opt.beta1) * g;
        opt.second_moment[i] = opt.beta2 * opt.second_moment[i] + (1.0 - opt.beta2) * g * g;
        let m_hat = opt.first_moment[i] / bc1;
        let v_hat = opt.second_moment[i] / bc2;
        let p = params[i] * (1.0 - opt.learning_rate * opt.weight_decay);
        params[i] = wrap_angle(p - opt.learning_rate * m_hat / (v_hat.sqrt() + opt.eps));
    }
    Ok(())
}
