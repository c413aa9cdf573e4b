//! Numerical laboratory for the dimerized (Su-Schrieffer-Heeger) chain with
//! random u-bond amplitudes.
//!
//! - [`model`]: real-space, Bloch and flux matrices of the chain
//! - [`invariant`]: Z2 index by flux winding, product criterion and Zak phase
//! - [`ensemble`]: reproducible parallel Monte Carlo over disorder realizations
//! - [`analytic`]: cumulants, the averaged index and critical surfaces
//! - [`spectrum`]: eigensolvers and near-zero eigenvectors
//! - [`born`]: disorder-averaged Green function in the first Born approximation

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod born;
pub mod ensemble;
pub mod error;
pub mod invariant;
pub mod matrix;
pub mod model;
pub mod numeric;
pub mod spectrum;

pub use error::{Error, Result};
