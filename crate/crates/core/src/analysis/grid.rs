//! Q-value landscape over two pole coordinates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qnn::{AngleParams, Observation, PoleParams, Qnn};

/// Points per axis: `-π, -π + π/16, …, π`.
pub const GRID_POINTS: usize = 33;

pub fn grid_axis() -> Vec<f64> {
    (0..GRID_POINTS)
        .map(|i| -PI + i as f64 * PI / 16.0)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoleGrid {
    pub axis_values: Vec<f64>,
    /// `values[i][j]` is `max_a Q` with the first coordinate at `axis_values[i]`
    /// and the second at `axis_values[j]`.
    pub values: Vec<Vec<f64>>,
    pub coords: [usize; 2],
    pub state_label: String,
}

impl PoleGrid {
    /// Row-major `(theta1, theta2, qmax)` triples.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.values.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .enumerate()
                .map(move |(j, &q)| (self.axis_values[i], self.axis_values[j], q))
        })
    }

    /// Index of the axis value closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let mut best = 0;
        for (i, v) in self.axis_values.iter().enumerate() {
            if (v - x).abs() < (self.axis_values[best] - x).abs() {
                best = i;
            }
        }
        best
    }
}

/// Evaluates `max_a Q(o, a; φ, θ)` on the grid with `θ[coords[0]]` and
/// `θ[coords[1]]` overwritten and every other coordinate taken from `base`.
pub fn pole_grid_probe(
    qnn: &Qnn,
    phi: &AngleParams,
    base: &PoleParams,
    o: &Observation,
    coords: [usize; 2],
    state_label: &str,
) -> Result<PoleGrid> {
    let cfg = qnn.config();
    if phi.len() != cfg.num_angles() || base.len() != cfg.num_poles() {
        return Err(Error::Size(
            "parameter lengths do not match the network".into(),
        ));
    }
    if o.len() != cfg.num_qubits {
        return Err(Error::Size(format!(
            "observation has {} entries, expected {}",
            o.len(),
            cfg.num_qubits
        )));
    }
    if coords.iter().any(|&c| c >= base.len()) || coords[0] == coords[1] {
        return Err(Error::Index(format!(
            "grid coordinates {coords:?} invalid for {} poles",
            base.len()
        )));
    }
    let state = qnn.output_state_raw(o.angles(), phi.as_slice());
    let axis = grid_axis();
    let mut theta = base.as_slice().to_vec();
    let values = axis
        .iter()
        .map(|&t1| {
            axis.iter()
                .map(|&t2| {
                    theta[coords[0]] = t1;
                    theta[coords[1]] = t2;
                    qnn.q_values_on_state(&state, &theta)
                        .into_iter()
                        .fold(f64::NEG_INFINITY, f64::max)
                })
                .collect()
        })
        .collect();
    Ok(PoleGrid {
        axis_values: axis,
        values,
        coords,
        state_label: state_label.to_string(),
    })
}

/// `D = |q_star - grid|` divided by its spread `max D - min D`.
///
/// The numerator keeps its offset (no `min D` subtraction), so values lie in
/// `[min D, max D] / (max D - min D)` rather than `[0, 1]`; only the position
/// of the minimum is scale-free. An all-zero `D` is returned as is; a constant
/// nonzero `D` has no spread and is an error.
pub fn d_norm(grid: &PoleGrid, q_star: f64) -> Result<Vec<Vec<f64>>> {
    let d: Vec<Vec<f64>> = grid
        .values
        .iter()
        .map(|row| row.iter().map(|q| (q_star - q).abs()).collect())
        .collect();
    let flat = d.iter().flatten();
    let lo = flat.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = flat.copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == 0.0 {
        return Ok(d);
    }
    if hi == lo {
        return Err(Error::Domain(format!(
            "distance is constant ({hi}) over the grid"
        )));
    }
    let spread = hi - lo;
    Ok(d.into_iter()
        .map(|row| row.into_iter().map(|x| x / spread).collect())
        .collect())
}

/// Grid indices of the smallest entry (first in row-major order).
pub fn argmin(values: &[Vec<f64>]) -> (usize, usize) {
    let mut best = (0, 0);
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v < values[best.0][best.1] {
                best = (i, j);
            }
        }
    }
    best
}
