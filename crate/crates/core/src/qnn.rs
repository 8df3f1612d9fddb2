//! Quantum Q-network: one-variable `R_y` encoder, layered PQC, and a
//! measurement whose axis is set by trainable pole angles.
//!
//! Angle layout: `phi[((layer * L) + (q - 1)) * 3 + slot]` with slot order
//! `R_x, R_y, R_z` (applied in that order). After every layer a ring of CNOTs
//! runs with control `q` and target `(q mod L) + 1`.
//!
//! Pole layout: two angles per qubit, `theta[2 (q - 1)]` is the polar angle and
//! `theta[2 (q - 1) + 1]` the azimuth. The observable on qubit `q` is
//! `U† Z U` with `U = R_y(polar) R_z(azimuth)`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{Axis, Gate2x2, Statevector};

/// Axis order of the three parameterised rotations each qubit gets per layer.
pub const ROTATION_ORDER: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

/// Default observable scale.
/// Registers at least this wide spread shift-rule coordinates over threads.
const PAR_MIN_QUBITS: usize = 8;

pub const DEFAULT_BETA: f64 = 8.0;

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnnConfig {
    pub num_qubits: usize,
    pub depth: usize,
    pub beta: f64,
    /// `action_qubits[a]` is the set of measured qubits (1-based) of action `a`.
    pub action_qubits: Vec<Vec<usize>>,
}

impl QnnConfig {
    pub fn new(
        num_qubits: usize,
        depth: usize,
        beta: f64,
        action_qubits: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let cfg = Self {
            num_qubits,
            depth,
            beta,
            action_qubits,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_qubits > Statevector::MAX_QUBITS {
            return Err(Error::Size(format!(
                "num_qubits must be in [1, {}], got {}",
                Statevector::MAX_QUBITS,
                self.num_qubits
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Domain(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        if self.action_qubits.is_empty() {
            return Err(Error::Argument("at least one action is required".into()));
        }
        for (a, qubits) in self.action_qubits.iter().enumerate() {
            if qubits.is_empty() {
                return Err(Error::Argument(format!("action {a} measures no qubit")));
            }
            for &q in qubits {
                if q == 0 || q > self.num_qubits {
                    return Err(Error::Index(format!(
                        "action {a} measures qubit {q} outside [1, {}]",
                        self.num_qubits
                    )));
                }
            }
            let mut sorted = qubits.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != qubits.len() {
                return Err(Error::Argument(format!("action {a} lists a qubit twice")));
            }
        }
        Ok(())
    }

    /// Two-step game network: `L = 3`, `D = 5`, action 0 on qubit 2, action 1 on qubit 3.
    pub fn two_step() -> Self {
        Self {
            num_qubits: 3,
            depth: 5,
            beta: DEFAULT_BETA,
            action_qubits: vec![vec![2], vec![3]],
        }
    }

    /// Single-hop network: `L = 4`, `D = 4`, action `a` on qubit `a + 1`.
    pub fn single_hop() -> Self {
        Self {
            num_qubits: 4,
            depth: 4,
            beta: DEFAULT_BETA,
            action_qubits: (1..=4).map(|q| vec![q]).collect(),
        }
    }

    pub fn num_angles(&self) -> usize {
        3 * self.num_qubits * self.depth
    }

    pub fn num_poles(&self) -> usize {
        2 * self.num_qubits
    }

    pub fn num_actions(&self) -> usize {
        self.action_qubits.len()
    }

    pub fn angle_index(&self, layer: usize, qubit: usize, slot: usize) -> usize {
        (layer * self.num_qubits + (qubit - 1)) * 3 + slot
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "{what} contains non-finite value {bad}"
        )));
    }
    Ok(())
}

/// Circuit angles `φ`, kept wrapped to `(-π, π]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngleParams(Vec<f64>);

impl AngleParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values, "angle parameters")?;
        Ok(Self(values.into_iter().map(wrap_angle).collect()))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.gen_range(-PI..PI)).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Measurement poles `θ`: `(polar, azimuth)` per qubit, wrapped to `(-π, π]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PoleParams(Vec<f64>);

impl PoleParams {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values, "pole parameters")?;
        if values.len() % 2 != 0 {
            return Err(Error::Size(format!(
                "pole vector needs two angles per qubit, got {} values",
                values.len()
            )));
        }
        Ok(Self(values.into_iter().map(wrap_angle).collect()))
    }

    /// The origin of the pole domain (every axis along `+z`).
    pub fn zeros(num_qubits: usize) -> Self {
        Self(vec![0.0; 2 * num_qubits])
    }

    pub fn random<R: Rng + ?Sized>(num_qubits: usize, rng: &mut R) -> Self {
        Self(
            (0..2 * num_qubits)
                .map(|_| rng.gen_range(-PI..PI))
                .collect(),
        )
    }

    pub fn polar(&self, qubit: usize) -> f64 {
        self.0[2 * (qubit - 1)]
    }

    pub fn azimuth(&self, qubit: usize) -> f64 {
        self.0[2 * (qubit - 1) + 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Encoding angles, one per qubit, each in `[0, π]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(Vec<f64>);

impl Observation {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if let Some(bad) = angles.iter().find(|x| !(0.0..=PI).contains(*x)) {
            return Err(Error::Domain(format!(
                "observation angle {bad} outside [0, pi]"
            )));
        }
        Ok(Self(angles))
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `U† Z U` with `U = R_y(polar) R_z(azimuth)`. For zero azimuth this is
/// `cos(polar) Z - sin(polar) X`.
pub fn pole_observable(polar: f64, azimuth: f64) -> Gate2x2 {
    let u =
        Gate2x2::rotation_unchecked(Axis::Y, polar) * Gate2x2::rotation_unchecked(Axis::Z, azimuth);
    let mut m = u.dagger() * Gate2x2::pauli_z() * u;
    // Symmetrise away rounding so the Hermitian check is exact.
    let off = 0.5 * (m.m[0][1] + m.m[1][0].conj());
    m.m[0][1] = off;
    m.m[1][0] = off.conj();
    m.m[0][0].im = 0.0;
    m.m[1][1].im = 0.0;
    m
}

/// Which parameter vector a finite-difference gradient runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamDomain {
    Angle,
    Pole,
}

/// `softmax(values / temperature)`.
pub fn softmax(values: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values
        .iter()
        .map(|v| ((v - top) / temperature).exp())
        .collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct Qnn {
    config: QnnConfig,
}

impl Qnn {
    pub fn new(config: QnnConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &QnnConfig {
        &self.config
    }

    pub fn beta(&self) -> f64 {
        self.config.beta
    }

    pub fn num_actions(&self) -> usize {
        self.config.num_actions()
    }

    fn check_obs(&self, o: &Observation) -> Result<()> {
        if o.len() != self.config.num_qubits {
            return Err(Error::Size(format!(
                "observation has {} angles, network has {} qubits",
                o.len(),
                self.config.num_qubits
            )));
        }
        Ok(())
    }

    fn check_angles(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.config.num_angles() {
            return Err(Error::Size(format!(
                "expected {} angle parameters, got {}",
                self.config.num_angles(),
                phi.len()
            )));
        }
        Ok(())
    }

    fn check_poles(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.config.num_poles() {
            return Err(Error::Size(format!(
                "expected {} pole parameters, got {}",
                self.config.num_poles(),
                theta.len()
            )));
        }
        Ok(())
    }

    fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.config.num_actions() {
            return Err(Error::UnknownAction(a));
        }
        Ok(())
    }

    /// `⊗_k R_y(o_k)|0⟩`.
    pub fn encode(&self, o: &Observation) -> Result<Statevector> {
        self.check_obs(o)?;
        Ok(self.encode_unchecked(o.angles()))
    }

    fn encode_unchecked(&self, angles: &[f64]) -> Statevector {
        let mut state = Statevector::zero(self.config.num_qubits).expect("validated qubit count");
        for (k, &angle) in angles.iter().enumerate() {
            state.apply_1q_unchecked(&Gate2x2::rotation_unchecked(Axis::Y, angle), k + 1);
        }
        state
    }

    pub fn pqc_forward(&self, state: &Statevector, phi: &AngleParams) -> Result<Statevector> {
        if state.num_qubits() != self.config.num_qubits {
            return Err(Error::Size(format!(
                "state has {} qubits, network has {}",
                state.num_qubits(),
                self.config.num_qubits
            )));
        }
        self.check_angles(phi.as_slice())?;
        let mut out = state.clone();
        self.pqc_in_place(&mut out, phi.as_slice());
        Ok(out)
    }

    fn pqc_in_place(&self, state: &mut Statevector, phi: &[f64]) {
        let l = self.config.num_qubits;
        for layer in 0..self.config.depth {
            for q in 1..=l {
                for (slot, &axis) in ROTATION_ORDER.iter().enumerate() {
                    let angle = phi[self.config.angle_index(layer, q, slot)];
                    if angle != 0.0 {
                        state.apply_1q_unchecked(&Gate2x2::rotation_unchecked(axis, angle), q);
                    }
                }
            }
            if l > 1 {
                for q in 1..=l {
                    state.apply_cnot_unchecked(q, q % l + 1);
                }
            }
        }
    }

    /// `|ψ_{o,φ}⟩ = U(φ)|ψ_o⟩`.
    pub fn output_state(&self, o: &Observation, phi: &AngleParams) -> Result<Statevector> {
        self.check_obs(o)?;
        self.check_angles(phi.as_slice())?;
        Ok(self.output_state_raw(o.angles(), phi.as_slice()))
    }

    pub(crate) fn output_state_raw(&self, o: &[f64], phi: &[f64]) -> Statevector {
        let mut state = self.encode_unchecked(o);
        self.pqc_in_place(&mut state, phi);
        state
    }

    /// `⟨O_a⟩ = Σ_{m ∈ M_a} ⟨M_{θ_m}⟩` on an already prepared state.
    pub fn expectation_on_state(&self, state: &Statevector, a: usize, theta: &[f64]) -> f64 {
        self.config.action_qubits[a]
            .iter()
            .map(|&m| {
                let obs = pole_observable(theta[2 * (m - 1)], theta[2 * (m - 1) + 1]);
                state.expect_1q_unchecked(&obs, m)
            })
            .sum()
    }

    /// `⟨O_a⟩` for every action on an already prepared state.
    pub fn expectations_on_state(&self, state: &Statevector, theta: &[f64]) -> Vec<f64> {
        (0..self.config.num_actions())
            .map(|a| self.expectation_on_state(state, a, theta))
            .collect()
    }

    pub(crate) fn expectation_raw(&self, o: &[f64], a: usize, phi: &[f64], theta: &[f64]) -> f64 {
        let state = self.output_state_raw(o, phi);
        self.expectation_on_state(&state, a, theta)
    }

    /// Unscaled `⟨O_a⟩_{o,φ,θ}`.
    pub fn expectation(
        &self,
        o: &Observation,
        a: usize,
        phi: &AngleParams,
        theta: &PoleParams,
    ) -> Result<f64> {
        self.check_obs(o)?;
        self.check_action(a)?;
        self.check_angles(phi.as_slice())?;
        self.check_poles(theta.as_slice())?;
        Ok(self.expectation_raw(o.angles(), a, phi.as_slice(), theta.as_slice()))
    }

    /// `Q(o, a; φ, θ) = β ⟨O_a⟩`.
    pub fn q_value(
        &self,
        o: &Observation,
        a: usize,
        phi: &AngleParams,
        theta: &PoleParams,
    ) -> Result<f64> {
        Ok(self.config.beta * self.expectation(o, a, phi, theta)?)
    }

    /// Q values for every action from a single forward pass.
    pub fn q_values_all(
        &self,
        o: &Observation,
        phi: &AngleParams,
        theta: &PoleParams,
    ) -> Result<Vec<f64>> {
        let state = self.output_state(o, phi)?;
        self.check_poles(theta.as_slice())?;
        Ok(self.q_values_on_state(&state, theta.as_slice()))
    }

    pub(crate) fn q_values_on_state(&self, state: &Statevector, theta: &[f64]) -> Vec<f64> {
        let beta = self.config.beta;
        self.expectations_on_state(state, theta)
            .into_iter()
            .map(|e| beta * e)
            .collect()
    }

    pub fn policy(
        &self,
        o: &Observation,
        phi: &AngleParams,
        theta: &PoleParams,
        temperature: f64,
    ) -> Result<Vec<f64>> {
        if !(temperature > 0.0) {
            return Err(Error::Domain(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        softmax(&self.q_values_all(o, phi, theta)?, temperature)
    }

    /// Parameter-shift derivative of `⟨O_a⟩` with respect to every angle.
    pub fn grad_angle_shift(
        &self,
        o: &Observation,
        a: usize,
        phi: &AngleParams,
        theta: &PoleParams,
    ) -> Result<Vec<f64>> {
        self.check_obs(o)?;
        self.check_action(a)?;
        self.check_angles(phi.as_slice())?;
        self.check_poles(theta.as_slice())?;
        Ok(self.grad_angle_shift_raw(o.angles(), a, phi.as_slice(), theta.as_slice()))
    }

    pub(crate) fn grad_angle_shift_raw(
        &self,
        o: &[f64],
        a: usize,
        phi: &[f64],
        theta: &[f64],
    ) -> Vec<f64> {
        let encoded = self.encode_unchecked(o);
        let coord = |k: usize| {
            let mut shifted = phi.to_vec();
            shifted[k] = phi[k] + FRAC_PI_2;
            let mut plus = encoded.clone();
            self.pqc_in_place(&mut plus, &shifted);
            shifted[k] = phi[k] - FRAC_PI_2;
            let mut minus = encoded.clone();
            self.pqc_in_place(&mut minus, &shifted);
            0.5 * (self.expectation_on_state(&plus, a, theta)
                - self.expectation_on_state(&minus, a, theta))
        };
        // Thread dispatch costs more than a small circuit.
        if self.config.num_qubits >= PAR_MIN_QUBITS {
            (0..phi.len()).into_par_iter().map(coord).collect()
        } else {
            (0..phi.len()).map(coord).collect()
        }
    }

    /// The `±π/2`-shifted output states for angle `k`.
    pub fn shifted_states(
        &self,
        o: &Observation,
        phi: &AngleParams,
        k: usize,
    ) -> Result<(Statevector, Statevector)> {
        self.check_obs(o)?;
        self.check_angles(phi.as_slice())?;
        if k >= phi.len() {
            return Err(Error::Index(format!(
                "angle index {k} outside [0, {})",
                phi.len()
            )));
        }
        let mut shifted = phi.as_slice().to_vec();
        shifted[k] += FRAC_PI_2;
        let plus = self.output_state_raw(o.angles(), &shifted);
        shifted[k] -= 2.0 * FRAC_PI_2;
        let minus = self.output_state_raw(o.angles(), &shifted);
        Ok((plus, minus))
    }

    /// Parameter-shift derivative of `⟨O_a⟩` with respect to every pole
    /// coordinate; entries for qubits outside `M_a` are zero.
    pub fn grad_pole_shift(
        &self,
        o: &Observation,
        a: usize,
        phi: &AngleParams,
        theta: &PoleParams,
    ) -> Result<Vec<f64>> {
        self.check_action(a)?;
        self.check_poles(theta.as_slice())?;
        let state = self.output_state(o, phi)?;
        Ok(self.grad_pole_on_state(&state, a, theta.as_slice()))
    }

    pub fn grad_pole_on_state(&self, state: &Statevector, a: usize, theta: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; theta.len()];
        for &m in &self.config.action_qubits[a] {
            let (p, z) = (theta[2 * (m - 1)], theta[2 * (m - 1) + 1]);
            let eval = |p: f64, z: f64| state.expect_1q_unchecked(&pole_observable(p, z), m);
            grad[2 * (m - 1)] = 0.5 * (eval(p + FRAC_PI_2, z) - eval(p - FRAC_PI_2, z));
            grad[2 * (m - 1) + 1] = 0.5 * (eval(p, z + FRAC_PI_2) - eval(p, z - FRAC_PI_2));
        }
        grad
    }

    /// Central finite difference of `⟨O_a⟩` with step `c ∈ (0, 1e-2]`.
    pub fn grad_fd(
        &self,
        o: &Observation,
        a: usize,
        phi: &AngleParams,
        theta: &PoleParams,
        domain: ParamDomain,
        c: f64,
    ) -> Result<Vec<f64>> {
        if !(c > 0.0 && c <= 1e-2) {
            return Err(Error::Domain(format!(
                "finite-difference step must be in (0, 1e-2], got {c}"
            )));
        }
        self.check_obs(o)?;
        self.check_action(a)?;
        self.check_angles(phi.as_slice())?;
        self.check_poles(theta.as_slice())?;
        let (phi, theta) = (phi.as_slice(), theta.as_slice());
        let grad = match domain {
            ParamDomain::Angle => {
                central_difference(phi, c, |p| self.expectation_raw(o.angles(), a, p, theta))
            }
            ParamDomain::Pole => {
                let state = self.output_state_raw(o.angles(), phi);
                central_difference(theta, c, |t| self.expectation_on_state(&state, a, t))
            }
        };
        Ok(grad)
    }
}

/// `(f(x + c e_k) - f(x - c e_k)) / 2c` for every coordinate `k`.
pub fn central_difference<F>(x: &[f64], c: f64, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            probe[k] = x[k] + c;
            let up = f(&probe);
            probe[k] = x[k] - c;
            let down = f(&probe);
            probe[k] = x[k];
            (up - down) / (2.0 * c)
        })
        .collect()
}
