//! Annealed complexity of random landscapes `H(x) = X(x) + mu |x|^2 / 2`
//! driven by Gaussian fields with isotropic increments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod complexity;
pub mod correlator;
pub mod error;
pub mod geometry;
pub mod hessian;
pub mod kacrice;
pub mod numeric;
pub mod rmt;
pub mod rng;

pub use error::{Error, Result};
