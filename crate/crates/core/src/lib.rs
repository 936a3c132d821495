//! Sparse penalized regression by majorization-minimization, certificates for
//! reading an LLA iteration as an EM algorithm, and spike-and-slab
//! posterior-median thresholding.
//!
//! The crate is organised bottom-up:
//!
//! - [`penalty`]: L1, SCAD and log penalties as value/derivative pairs.
//! - [`mm_solver`]: the `f - g` decomposition of a penalized Gaussian
//!   log-likelihood, LLA/LQA surrogates and the one-step, k-step and fully
//!   iterated drivers.
//! - [`em_lift`]: moment-generating-function lifts that turn the LLA
//!   surrogate into an EM Q-function, with numerical certificates.
//! - [`posterior_median`]: the marginal posterior under a spike-and-slab prior
//!   and its closed-form median.
//! - [`bench`]: a seeded Monte Carlo harness comparing the estimators.
//! - [`cli`]: the `sparsemm` command line.

// Negated comparisons such as `!(x > 0.0)` are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod em_lift;
mod error;
pub mod format;
pub mod mm_solver;
pub mod numeric;
pub mod penalty;
pub mod posterior_median;

pub use error::{Error, Result};
