//! Goal-oriented reduced basis surrogates for non-intrusive generalized polynomial chaos.
//!
//! The crate is organised bottom-up:
//!
//! - [`polybasis`]: univariate orthonormal families and total-degree tensor bases.
//! - [`quadrature`]: Gauss, tensor-product and nested sparse-grid rules.
//! - [`truthpde`]: the affine-parametric finite-difference truth discretization.
//! - [`rbm`]: weighted a posteriori estimator, goal-oriented greedy and online solves.
//! - [`gpcqoi`]: pseudospectral gPC coefficients, quantities of interest and their
//!   certified error constants.
//! - [`harness`]: experiment configuration, offline/online/direct pipelines and reports.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod gpcqoi;
pub mod harness;
pub mod io;
pub mod polybasis;
pub mod quadrature;
pub mod rbm;
pub mod truthpde;

pub use error::{Error, Result};
