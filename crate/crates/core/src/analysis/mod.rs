//! Numeric checks and probing instruments.

mod distance;
mod gradcheck;
mod grid;
mod lemma;

pub use distance::{optimal_q_distance, optimal_q_distance_terms, StateDistance};
pub use gradcheck::{gradcheck_suite, GradcheckReport, ANGLE_TOL, FD_STEP, LOSS_TOL, POLE_TOL};
pub use grid::{argmin, d_norm, grid_axis, pole_grid_probe, PoleGrid, GRID_POINTS};
pub use lemma::{lemma1_check, lemma3_check, sinc, Lemma3Report, LemmaReport};
