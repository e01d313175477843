//! Difference-based autocovariance estimation for nonparametric regression
//! with a piecewise-constant signal and stationary m-dependent errors.
//!
//! The crate is organised by stage of the pipeline:
//!
//! - [`signal`]: series, step signals and autocovariance containers.
//! - [`estimators`]: gap-`h` and second-order gap-`(m+1)` difference estimators
//!   together with the bias-optimal weights.
//! - [`analytic`]: closed-form bias and MSE components of the estimators.
//! - [`projection`]: nearest positive-semidefinite banded Toeplitz matrix by
//!   Dykstra-corrected alternating projections.
//! - [`mafit`]: MA(m) models and the innovations fit of an autocovariance.
//! - [`jusd`]: multiscale jump segmentation for m-dependent data.
//! - [`sim`]: error/signal generators and the Monte Carlo benchmark.

// `!(x > 0.0)` guards are meant to reject NaN; matrix kernels index by position.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod error;
pub mod estimators;
pub mod jusd;
pub mod mafit;
pub mod projection;
pub mod signal;
pub mod sim;

pub use error::{DbacfError, Result};
pub use signal::{Acvf, Series, StepSignal};
