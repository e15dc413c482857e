//! Numerics for the weakly dissipative Camassa-Holm family
//! `u_t + (u + Gamma) u_x + lambda u = (1 - d_xx)^{-1} d_x (h(u) - u^2 - u_x^2/2)`
//! on a periodic box: a pseudo-spectral Eulerian solver, a Lagrangian
//! characteristic solver, Littlewood-Paley/Besov tooling and the experiment
//! drivers built on top of them.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these checks

pub mod besov;
pub mod error;
pub mod eulerian;
pub mod harness;
pub mod lagrangian;
pub mod model;
pub mod norms;
pub mod serde_ext;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
pub use eulerian::{TimeStepperConfig, TrajectoryRecord};
pub use model::{Field, ModelParams, PeriodicGrid};
pub use stepper::Termination;
