use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Perturb both polar and azimuth angles.
    #[default]
    AllPoleCoords,
    /// Perturb polar angles only; azimuth slots stay 0.
    PolarOnly,
}

/// Uniform pole noise `θ̃ ~ U(-α, α)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    alpha: f64,
    mode: NoiseMode,
}

impl NoiseSpec {
    pub fn new(alpha: f64, mode: NoiseMode) -> Result<Self> {
        if !(0.0..=PI).contains(&alpha) {
            return Err(Error::Domain(format!(
                "noise bound must be in [0, pi], got {alpha}"
            )));
        }
        Ok(Self { alpha, mode })
    }

    pub fn from_degrees(degrees: f64, mode: NoiseMode) -> Result<Self> {
        Self::new(degrees.to_radians(), mode)
    }

    pub fn none() -> Self {
        Self {
            alpha: 0.0,
            mode: NoiseMode::AllPoleCoords,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    /// Draws a noise vector for a pole vector of length `dim`
    /// (`(polar, azimuth)` pairs).
    pub fn sample<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        if self.alpha == 0.0 {
            return vec![0.0; dim];
        }
        (0..dim)
            .map(|i| {
                if self.mode == NoiseMode::PolarOnly && i % 2 == 1 {
                    0.0
                } else {
                    rng.gen_range(-self.alpha..=self.alpha)
                }
            })
            .collect()
    }
}

pub fn sample_pole_noise<R: Rng + ?Sized>(spec: &NoiseSpec, dim: usize, rng: &mut R) -> Vec<f64> {
    spec.sample(dim, rng)
}
