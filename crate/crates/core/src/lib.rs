//! Convexified maximum-likelihood graph clustering.
//!
//! The estimator relaxes "Y is a cluster matrix" to the unit box plus a
//! nuclear-norm penalty and weights agreements with the observed graph by
//! a resolution threshold `t`. See the crate README for an overview.

pub mod alm;
pub mod baselines;
pub mod certificate;
pub mod error;
pub mod estimation;
pub mod graphmodel;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod objective;

pub use error::{Error, Result};
pub use linalg::Matrix;
