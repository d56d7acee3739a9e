//! Lopatinskii-Shapiro checks for the bi-Laplacian and its augmented operator
//! `D_s⁴ + Δ²`, discrete biharmonic spectra, observability constants, and
//! Lebeau-Robbiano null control of `ẏ + Δ²y = 1_ω v` in one space dimension.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod biharmonic;
pub mod conjugate;
pub mod control;
pub mod error;
pub mod exec;
pub mod ls;
pub mod probe;
pub mod quadrature;
pub mod refine;
pub mod symbol;

pub use error::{LabError, Result};
pub use exec::Exec;
