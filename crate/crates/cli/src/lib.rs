//! Experiment driver for `cvb-core`: configuration, seeded Monte Carlo loops and result files.

// Validation is written as `!(x > 0.0)` so that NaN is rejected along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod output;

use anyhow::{Context, Result};

pub use config::{Config, Experiment};
pub use output::Report;

/// Validate `cfg` and run its experiment on a pool of `threads` workers (rayon's default
/// when `None`). Results do not depend on the thread count.
pub fn run_experiment(cfg: &Config, threads: Option<usize>) -> Result<Report> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building the worker pool")?;
    pool.install(|| match cfg.experiment {
        Experiment::Bivariate => experiments::run_bivariate_experiment(cfg).map(Report::Bivariate),
        Experiment::Gmm => experiments::run_gmm_experiment(cfg).map(Report::Gmm),
        Experiment::OracleCheck => experiments::run_oracle_experiment(cfg).map(Report::OracleCheck),
    })
}
