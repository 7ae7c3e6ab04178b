// `!(a > b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Finite-difference and Haar-wavelet solvers for time-fractional
//! integro-differential equations with a Volterra memory term.

pub mod analysis;
pub mod error;
pub mod field;
pub mod fracops;
pub mod grid;
pub mod haar;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod reference;
pub mod solver1d;
pub mod solver2d;
pub mod volterra;

pub use error::{Error, Result};
