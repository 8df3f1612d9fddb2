//! Monte Carlo checks of the pole-noise contraction and gradient-variance bound.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{Gate2x2, Statevector};
use crate::qnn::{pole_observable, AngleParams, Observation, PoleParams, Qnn};
use crate::train::{MetaSample, NoiseMode, NoiseSpec};

/// Bloch vector `(⟨X⟩, ⟨Y⟩, ⟨Z⟩)` of one qubit.
fn bloch(state: &Statevector, qubit: usize) -> [f64; 3] {
    [
        state.expect_1q_unchecked(&Gate2x2::pauli_x(), qubit),
        state.expect_1q_unchecked(&Gate2x2::pauli_y(), qubit),
        state.expect_1q_unchecked(&Gate2x2::pauli_z(), qubit),
    ]
}

/// Pauli coefficients `(c_x, c_y, c_z)` of a traceless Hermitian 2×2 matrix.
fn pauli_coefficients(m: &Gate2x2) -> [f64; 3] {
    [
        m.m[0][1].re,
        -m.m[0][1].im,
        0.5 * (m.m[0][0].re - m.m[1][1].re),
    ]
}

fn pole_expectation(r: &[f64; 3], polar: f64, azimuth: f64) -> f64 {
    let c = pauli_coefficients(&pole_observable(polar, azimuth));
    c[0] * r[0] + c[1] * r[1] + c[2] * r[2]
}

/// `sin(x)/x`, continuous at 0.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub alpha: f64,
    pub monte_carlo_estimate: f64,
    pub analytic_prediction: f64,
    pub sample_count: usize,
    pub standard_error: f64,
    pub pass: bool,
}

impl LemmaReport {
    /// `sin α / α`.
    pub fn factor(&self) -> f64 {
        sinc(self.alpha)
    }
}

/// Compares the Monte Carlo mean of `Q(o, a; φ, θ + θ̃)` under polar-only
/// noise with `(sin α / α) Q(o, a; φ, θ)`.
pub fn lemma1_check<R: Rng + ?Sized>(
    qnn: &Qnn,
    phi: &AngleParams,
    theta: &PoleParams,
    alpha: f64,
    o: &Observation,
    a: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<LemmaReport> {
    let spec = NoiseSpec::new(alpha, NoiseMode::PolarOnly)?;
    if n_samples < 2 {
        return Err(Error::Argument("at least two samples are required".into()));
    }
    let clean = qnn.q_value(o, a, phi, theta)?;
    let prediction = sinc(alpha) * clean;
    if alpha == 0.0 {
        return Ok(LemmaReport {
            alpha,
            monte_carlo_estimate: clean,
            analytic_prediction: prediction,
            sample_count: n_samples,
            standard_error: 0.0,
            pass: true,
        });
    }
    let state = qnn.output_state(o, phi)?;
    let qubits = &qnn.config().action_qubits[a];
    let blochs: Vec<[f64; 3]> = qubits.iter().map(|&m| bloch(&state, m)).collect();
    let th = theta.as_slice();
    let dim = th.len();
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let noise = spec.sample(dim, rng);
        let q: f64 = qubits
            .iter()
            .zip(&blochs)
            .map(|(&m, r)| {
                let i = 2 * (m - 1);
                pole_expectation(r, th[i] + noise[i], th[i + 1] + noise[i + 1])
            })
            .sum::<f64>()
            * qnn.beta();
        sum += q;
        sum_sq += q * q;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    let se = (var.max(0.0) / n).sqrt();
    Ok(LemmaReport {
        alpha,
        monte_carlo_estimate: mean,
        analytic_prediction: prediction,
        sample_count: n_samples,
        standard_error: se,
        pass: (mean - prediction).abs() <= 5.0 * se + 1e-3,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma3Report {
    pub alpha: f64,
    /// Angle coordinate the derivative is taken along.
    pub coordinate: usize,
    pub variance: f64,
    pub bound: f64,
    pub sample_count: usize,
    /// Standard error of the variance estimate.
    pub standard_error: f64,
    pub pass: bool,
}

/// Per-transition quantities the variance and bound are built from.
struct Prepared {
    qubit: usize,
    /// `r/β + max⟨O⟩` at the target network with clean poles.
    target: f64,
    r: [f64; 3],
    r_plus: [f64; 3],
    r_minus: [f64; 3],
    tr_a4_sq_m_sq: f64,
    tr_a4_m: f64,
}

/// `Tr(A₄² X)` for `A₄ = |ψ⁺⟩⟨ψ⁺| − |ψ⁻⟩⟨ψ⁻|` and `X` acting on one qubit.
fn trace_a4_sq(plus: &Statevector, minus: &Statevector, x: &Gate2x2, qubit: usize) -> f64 {
    let elem = |ket: &Statevector, bra: &Statevector| {
        ket.matrix_element_1q(bra, x, qubit)
            .expect("states share a register")
    };
    let pp = elem(plus, plus).re;
    let mm = elem(minus, minus).re;
    let overlap = plus.inner(minus);
    let cross = elem(plus, minus);
    pp + mm - 2.0 * (overlap * cross).re
}

/// Monte Carlo variance of `∂L/∂φ_k` under polar-only pole noise against the
/// stated bound
/// `(4β⁴/|E|²) Σ_τ [(sin 2α / 2α) A₃ Tr(A₄² M²) − (sin²α/α²) Tr(A₄ M)²]`.
///
/// Each Monte Carlo sample draws one noise vector shared by every transition.
/// Every action must measure exactly one qubit.
#[allow(clippy::too_many_arguments)]
pub fn lemma3_check<R: Rng + ?Sized>(
    qnn: &Qnn,
    phi: &AngleParams,
    phi_target: &AngleParams,
    theta: &PoleParams,
    alpha: f64,
    samples: &[MetaSample],
    k: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<Lemma3Report> {
    let spec = NoiseSpec::new(alpha, NoiseMode::PolarOnly)?;
    let cfg = qnn.config();
    if cfg.action_qubits.iter().any(|q| q.len() != 1) {
        return Err(Error::Argument(
            "the variance bound needs one measured qubit per action".into(),
        ));
    }
    if samples.is_empty() {
        return Err(Error::Argument("episode is empty".into()));
    }
    if k >= cfg.num_angles() {
        return Err(Error::Index(format!(
            "angle coordinate {k} outside [0, {})",
            cfg.num_angles()
        )));
    }
    if n_samples < 2 {
        return Err(Error::Argument("at least two samples are required".into()));
    }
    let beta = qnn.beta();
    let th = theta.as_slice();
    let prepared = samples
        .iter()
        .map(|s| {
            let qubit = cfg.action_qubits[s.action][0];
            let boot = if s.terminal {
                0.0
            } else {
                let state = qnn.output_state(&s.next_obs, phi_target)?;
                qnn.expectations_on_state(&state, th)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max)
            };
            let state = qnn.output_state(&s.obs, phi)?;
            let (plus, minus) = qnn.shifted_states(&s.obs, phi, k)?;
            let i = 2 * (qubit - 1);
            let m = pole_observable(th[i], th[i + 1]);
            let m_sq = m * m;
            Ok(Prepared {
                qubit,
                target: s.reward / beta + boot,
                r: bloch(&state, qubit),
                r_plus: bloch(&plus, qubit),
                r_minus: bloch(&minus, qubit),
                tr_a4_sq_m_sq: trace_a4_sq(&plus, &minus, &m_sq, qubit),
                tr_a4_m: plus.expect_1q_unchecked(&m, qubit) - minus.expect_1q_unchecked(&m, qubit),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_tr = prepared.len() as f64;
    let scale = 4.0 * beta.powi(4) / (n_tr * n_tr);
    let bound = scale
        * prepared
            .iter()
            .map(|p| {
                let a3 = (p.target - 1.0).powi(2);
                sinc(2.0 * alpha) * a3 * p.tr_a4_sq_m_sq - sinc(alpha).powi(2) * p.tr_a4_m.powi(2)
            })
            .sum::<f64>();

    let dim = th.len();
    let mut draws = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let noise = spec.sample(dim, rng);
        let g: f64 = prepared
            .iter()
            .map(|p| {
                let i = 2 * (p.qubit - 1);
                let (polar, az) = (th[i] + noise[i], th[i + 1] + noise[i + 1]);
                let o = pole_expectation(&p.r, polar, az);
                let d = 0.5
                    * (pole_expectation(&p.r_plus, polar, az)
                        - pole_expectation(&p.r_minus, polar, az));
                -2.0 * beta * beta / n_tr * (p.target - o) * d
            })
            .sum();
        draws.push(g);
    }
    let n = n_samples as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = draws.iter().map(|g| (g - mean).powi(4)).sum::<f64>() / n;
    let se = ((m4 - var * var).max(0.0) / n).sqrt();
    Ok(Lemma3Report {
        alpha,
        coordinate: k,
        variance: var,
        bound,
        sample_count: n_samples,
        standard_error: se,
        pass: var <= bound + 5.0 * se,
    })
}
