//! Dense statevector engine.
//!
//! Qubits are numbered `1..=L` at the API boundary. Internally qubit `m` maps
//! to bit `m - 1` of the amplitude index (little-endian), so for `L = 2` the
//! ket `|q1 q2⟩ = |10⟩` lives at index `0b01 = 1`.

use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Tolerance used when validating Hermitian observables.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A 2x2 complex matrix, used both as a single-qubit gate and as a
/// single-qubit observable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate2x2 {
    pub m: [[C64; 2]; 2],
}

impl Gate2x2 {
    pub const fn new(m: [[C64; 2]; 2]) -> Self {
        Self { m }
    }

    pub const fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn pauli_x() -> Self {
        Self::new([[ZERO, ONE], [ONE, ZERO]])
    }

    pub const fn pauli_y() -> Self {
        Self::new([[ZERO, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), ZERO]])
    }

    pub const fn pauli_z() -> Self {
        Self::new([[ONE, ZERO], [ZERO, C64::new(-1.0, 0.0)]])
    }

    pub fn pauli(axis: Axis) -> Self {
        match axis {
            Axis::X => Self::pauli_x(),
            Axis::Y => Self::pauli_y(),
            Axis::Z => Self::pauli_z(),
        }
    }

    /// `exp(-i δ/2 P)` without the finiteness check; used on hot paths.
    pub(crate) fn rotation_unchecked(axis: Axis, delta: f64) -> Self {
        let (s, c) = (0.5 * delta).sin_cos();
        match axis {
            Axis::X => Self::new([
                [C64::new(c, 0.0), C64::new(0.0, -s)],
                [C64::new(0.0, -s), C64::new(c, 0.0)],
            ]),
            Axis::Y => Self::new([
                [C64::new(c, 0.0), C64::new(-s, 0.0)],
                [C64::new(s, 0.0), C64::new(c, 0.0)],
            ]),
            Axis::Z => Self::new([[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]]),
        }
    }

    pub fn dagger(&self) -> Self {
        let m = &self.m;
        Self::new([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.dagger() * *self).max_abs_diff(&Self::identity()) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.dagger()) <= tol
    }

    /// Eigenvalues of a Hermitian matrix, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = self.m[0][1].norm();
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - half_gap, mean + half_gap]
    }
}

impl Mul for Gate2x2 {
    type Output = Gate2x2;

    fn mul(self, rhs: Gate2x2) -> Gate2x2 {
        let (a, b) = (&self.m, &rhs.m);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Gate2x2::new(out)
    }
}

/// `exp(-i δ/2 P_axis)`.
pub fn rotation_gate(axis: Axis, delta: f64) -> Result<Gate2x2> {
    if !delta.is_finite() {
        return Err(Error::Domain(format!(
            "rotation angle must be finite, got {delta}"
        )));
    }
    Ok(Gate2x2::rotation_unchecked(axis, delta))
}

/// An `L`-qubit pure state stored as `2^L` amplitudes.
#[derive(Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl fmt::Debug for Statevector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Statevector")
            .field("num_qubits", &self.num_qubits)
            .field("amps", &self.amps)
            .finish()
    }
}

impl Statevector {
    pub const MAX_QUBITS: usize = 12;

    fn check_size(num_qubits: usize) -> Result<()> {
        if num_qubits == 0 || num_qubits > Self::MAX_QUBITS {
            return Err(Error::Size(format!(
                "qubit count must be in [1, {}], got {num_qubits}",
                Self::MAX_QUBITS
            )));
        }
        Ok(())
    }

    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::check_size(num_qubits)?;
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[0] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Computational basis state; `bits[m - 1]` is the value of qubit `m`.
    pub fn basis(bits: &[u8]) -> Result<Self> {
        let mut state = Self::zero(bits.len())?;
        let mut index = 0usize;
        for (bit, &value) in bits.iter().enumerate() {
            match value {
                0 => {}
                1 => index |= 1 << bit,
                other => {
                    return Err(Error::Domain(format!(
                        "basis bit must be 0 or 1, got {other}"
                    )))
                }
            }
        }
        state.amps[0] = ZERO;
        state.amps[index] = ONE;
        Ok(state)
    }

    /// Wraps raw amplitudes; the length must be a power of two and the vector
    /// normalised within `1e-10`.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.len() < 2 || !amps.len().is_power_of_two() {
            return Err(Error::Size(format!(
                "amplitude count {} is not 2^L with L >= 1",
                amps.len()
            )));
        }
        let num_qubits = amps.len().trailing_zeros() as usize;
        Self::check_size(num_qubits)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!(
                "state is not normalised (|psi|^2 = {norm})"
            )));
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit == 0 || qubit > self.num_qubits {
            return Err(Error::Index(format!(
                "qubit {qubit} outside [1, {}]",
                self.num_qubits
            )));
        }
        Ok(())
    }

    pub fn apply_1q(&mut self, gate: &Gate2x2, target: usize) -> Result<()> {
        self.check_qubit(target)?;
        debug_assert!(gate.is_unitary(1e-9), "non-unitary gate {gate:?}");
        self.apply_1q_unchecked(gate, target);
        Ok(())
    }

    pub(crate) fn apply_1q_unchecked(&mut self, gate: &Gate2x2, target: usize) {
        let stride = 1usize << (target - 1);
        let [[g00, g01], [g10, g11]] = gate.m;
        for block in (0..self.amps.len()).step_by(stride << 1) {
            for i in block..block + stride {
                let a = self.amps[i];
                let b = self.amps[i + stride];
                self.amps[i] = g00 * a + g01 * b;
                self.amps[i + stride] = g10 * a + g11 * b;
            }
        }
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Argument(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        self.apply_cnot_unchecked(control, target);
        Ok(())
    }

    pub(crate) fn apply_cnot_unchecked(&mut self, control: usize, target: usize) {
        let cbit = 1usize << (control - 1);
        let tbit = 1usize << (target - 1);
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
    }

    /// `⟨bra| I⊗…⊗M⊗…⊗I |self⟩` with `M` acting on `qubit`.
    pub fn matrix_element_1q(&self, bra: &Statevector, op: &Gate2x2, qubit: usize) -> Result<C64> {
        self.check_qubit(qubit)?;
        if bra.num_qubits != self.num_qubits {
            return Err(Error::Size(format!(
                "bra has {} qubits, ket has {}",
                bra.num_qubits, self.num_qubits
            )));
        }
        Ok(self.matrix_element_unchecked(&bra.amps, op, qubit))
    }

    fn matrix_element_unchecked(&self, bra: &[C64], op: &Gate2x2, qubit: usize) -> C64 {
        let stride = 1usize << (qubit - 1);
        let [[m00, m01], [m10, m11]] = op.m;
        let mut acc = ZERO;
        for block in (0..self.amps.len()).step_by(stride << 1) {
            for i in block..block + stride {
                let a = self.amps[i];
                let b = self.amps[i + stride];
                acc += bra[i].conj() * (m00 * a + m01 * b)
                    + bra[i + stride].conj() * (m10 * a + m11 * b);
            }
        }
        acc
    }

    /// Expectation of a Hermitian single-qubit observable on `qubit`.
    pub fn expect_1q(&self, obs: &Gate2x2, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        if !obs.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::Domain("observable is not Hermitian".into()));
        }
        Ok(self.expect_1q_unchecked(obs, qubit))
    }

    pub(crate) fn expect_1q_unchecked(&self, obs: &Gate2x2, qubit: usize) -> f64 {
        let raw = self.matrix_element_unchecked(&self.amps, obs, qubit);
        debug_assert!(
            raw.im.abs() <= 1e-10 * (1.0 + raw.re.abs()),
            "imaginary residue {}",
            raw.im
        );
        raw.re
    }
}

/// `|0…0⟩` on `num_qubits` qubits.
pub fn zero_state(num_qubits: usize) -> Result<Statevector> {
    Statevector::zero(num_qubits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn zero_state_examples() {
        let s1 = zero_state(1).unwrap();
        assert_eq!(s1.amplitudes(), &[ONE, ZERO]);
        let s2 = zero_state(2).unwrap();
        assert_eq!(s2.amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        let s3 = zero_state(3).unwrap();
        assert_eq!(s3.amplitudes().len(), 8);
        assert!((s3.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_state_rejects_out_of_range_sizes() {
        assert!(matches!(zero_state(0), Err(Error::Size(_))));
        assert!(matches!(zero_state(13), Err(Error::Size(_))));
        assert!(zero_state(12).is_ok());
    }

    #[test]
    fn rotation_examples() {
        let ry0 = rotation_gate(Axis::Y, 0.0).unwrap();
        assert!(ry0.max_abs_diff(&Gate2x2::identity()) < 1e-15);

        let mut s = zero_state(1).unwrap();
        s.apply_1q(&rotation_gate(Axis::Y, PI).unwrap(), 1).unwrap();
        assert!(close(s.amplitudes()[0], ZERO, 1e-15));
        assert!(close(s.amplitudes()[1], ONE, 1e-15));

        let rz = rotation_gate(Axis::Z, FRAC_PI_2).unwrap();
        let expected = Gate2x2::new([
            [C64::from_polar(1.0, -FRAC_PI_4), ZERO],
            [ZERO, C64::from_polar(1.0, FRAC_PI_4)],
        ]);
        assert!(rz.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn rotation_rejects_non_finite_angle() {
        assert!(matches!(
            rotation_gate(Axis::X, f64::NAN),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            rotation_gate(Axis::Z, f64::INFINITY),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rotation_matches_matrix_exponential() {
        // exp(-i d/2 P) = cos(d/2) I - i sin(d/2) P for any Pauli P.
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            for &d in &[-2.7, -0.3, 0.0, 0.9, 3.1] {
                let p = Gate2x2::pauli(axis);
                let (s, c) = (0.5_f64 * d).sin_cos();
                let mut want = [[ZERO; 2]; 2];
                for r in 0..2 {
                    for col in 0..2 {
                        let id = if r == col { ONE } else { ZERO };
                        want[r][col] = id * c - C64::new(0.0, s) * p.m[r][col];
                    }
                }
                let got = rotation_gate(axis, d).unwrap();
                assert!(got.max_abs_diff(&Gate2x2::new(want)) < 1e-15);
                assert!(got.is_unitary(1e-12));
            }
        }
    }

    #[test]
    fn apply_1q_examples() {
        // R_y(pi) on qubit 1 of |00> gives |10>, stored at index 1.
        let mut s = zero_state(2).unwrap();
        s.apply_1q(&rotation_gate(Axis::Y, PI).unwrap(), 1).unwrap();
        let want = Statevector::basis(&[1, 0]).unwrap();
        assert!((s.inner(&want).norm() - 1.0).abs() < 1e-15);
        assert!(close(s.amplitudes()[1], ONE, 1e-15));

        let mut t = Statevector::basis(&[0, 1, 1]).unwrap();
        let before = t.clone();
        t.apply_1q(&Gate2x2::identity(), 2).unwrap();
        assert_eq!(t, before);

        let mut h = zero_state(1).unwrap();
        h.apply_1q(&rotation_gate(Axis::Y, FRAC_PI_2).unwrap(), 1)
            .unwrap();
        let c = FRAC_PI_4.cos();
        assert!(close(h.amplitudes()[0], C64::new(c, 0.0), 1e-15));
        assert!(close(
            h.amplitudes()[1],
            C64::new(FRAC_PI_4.sin(), 0.0),
            1e-15
        ));
    }

    #[test]
    fn apply_1q_rejects_bad_target() {
        let mut s = zero_state(2).unwrap();
        assert!(matches!(
            s.apply_1q(&Gate2x2::identity(), 0),
            Err(Error::Index(_))
        ));
        assert!(matches!(
            s.apply_1q(&Gate2x2::identity(), 3),
            Err(Error::Index(_))
        ));
    }

    #[test]
    fn cnot_examples() {
        let mut s = Statevector::basis(&[1, 0]).unwrap();
        s.apply_cnot(1, 2).unwrap();
        assert_eq!(s, Statevector::basis(&[1, 1]).unwrap());

        let mut z = zero_state(2).unwrap();
        z.apply_cnot(1, 2).unwrap();
        assert_eq!(z, zero_state(2).unwrap());

        let r = std::f64::consts::FRAC_1_SQRT_2;
        // (|00> + |10>)/sqrt2 -> (|00> + |11>)/sqrt2
        let mut bell =
            Statevector::from_amplitudes(vec![C64::new(r, 0.0), C64::new(r, 0.0), ZERO, ZERO])
                .unwrap();
        bell.apply_cnot(1, 2).unwrap();
        let amps = bell.amplitudes();
        assert!(close(amps[0], C64::new(r, 0.0), 1e-15));
        assert!(close(amps[3], C64::new(r, 0.0), 1e-15));
        assert!(close(amps[1], ZERO, 1e-15) && close(amps[2], ZERO, 1e-15));
    }

    #[test]
    fn cnot_rejects_equal_qubits() {
        let mut s = zero_state(3).unwrap();
        assert!(matches!(s.apply_cnot(2, 2), Err(Error::Argument(_))));
        assert!(matches!(s.apply_cnot(1, 4), Err(Error::Index(_))));
    }

    #[test]
    fn expectation_examples() {
        let z = Gate2x2::pauli_z();
        assert_eq!(zero_state(1).unwrap().expect_1q(&z, 1).unwrap(), 1.0);

        let mut eq = zero_state(1).unwrap();
        eq.apply_1q(&rotation_gate(Axis::Y, FRAC_PI_2).unwrap(), 1)
            .unwrap();
        assert!(eq.expect_1q(&z, 1).unwrap().abs() < 1e-12);

        let s = Statevector::basis(&[0, 1]).unwrap();
        assert_eq!(s.expect_1q(&z, 2).unwrap(), -1.0);
        assert_eq!(s.expect_1q(&z, 1).unwrap(), 1.0);
    }

    #[test]
    fn expectation_rejects_non_hermitian() {
        let s = zero_state(1).unwrap();
        let not_hermitian = rotation_gate(Axis::X, 0.4).unwrap();
        assert!(matches!(
            s.expect_1q(&not_hermitian, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn from_amplitudes_validates() {
        assert!(matches!(
            Statevector::from_amplitudes(vec![ONE, ZERO, ZERO]),
            Err(Error::Size(_))
        ));
        assert!(matches!(
            Statevector::from_amplitudes(vec![ONE, ONE]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hermitian_eigenvalues_of_paulis() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let ev = Gate2x2::pauli(axis).hermitian_eigenvalues();
            assert!((ev[0] + 1.0).abs() < 1e-15 && (ev[1] - 1.0).abs() < 1e-15);
        }
    }
}
