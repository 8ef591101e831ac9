//! Copula variational Bayes (CVB) and its mean-field special cases.
//!
//! The crate is organised bottom-up:
//!
//! - [`divergence`]: Bregman divergences, discrete and Gaussian KL, Bregman variance.
//! - [`copula`]: quantile transforms, the Gaussian copula, copula entropy and the
//!   copula/marginal split of a Gaussian KL.
//! - [`engine`]: the iterate-one-marginal-at-a-time driver with ELBO tracking.
//! - [`bivariate`]: closed-form CVB/VB for a zero-mean correlated bivariate Gaussian.
//! - [`gmm`]: isotropic Gaussian-mixture clustering with k-means/ICM, EM, VB and CVB.
//! - [`augment`]: optimal mixture weights over candidate approximations.
//! - [`oracle`]: brute-force exact posterior for tiny mixture instances.
//!
//! Everything is single-threaded and deterministic; parallelism lives in the CLI harness.

// Validation is written as `!(x > 0.0)` so that NaN is rejected along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod augment;
pub mod bivariate;
pub mod copula;
pub mod divergence;
pub mod engine;
pub mod error;
pub mod gmm;
pub mod numeric;
pub mod oracle;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
