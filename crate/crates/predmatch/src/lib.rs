//! Predictive probability matching priors: numerical evaluation and
//! Monte Carlo verification.
//!
//! A Bayesian prediction region with posterior predictive content `1 - alpha`
//! generally has frequentist coverage `1 - alpha` only up to a first-order
//! defect that shrinks like `1/n`. This crate computes that defect
//! numerically for a given prior, model, and level; constructs the candidate
//! prior that removes the defect at every level simultaneously (a *uniformly
//! predictive matching prior*, UPMP) from information-geometric gradient
//! formulas; and independently checks the whole expansion by simulation.
//!
//! The main pieces:
//!
//! - [`family`]: parametric models with a uniform evaluation interface and a
//!   catalog of built-ins carrying closed-form oracles.
//! - [`fisher`]: information matrices, the square-root-determinant prior
//!   gradient, and a level-integral identity for the information matrix.
//! - [`quantile_match`]: upper-quantile matching residuals, the gradient
//!   correction that turns the Jeffreys gradient into the UPMP gradient,
//!   gradient-field diagnostics, and log-prior reconstruction.
//! - [`hpd_match`]: highest-density-region analogues, the sensitivity Gram
//!   matrix, the region-matching UPMP gradient, and structure diagnostics.
//! - [`coverage`]: grid-quadrature posteriors, predictive quantiles and
//!   density thresholds, and replicated Monte Carlo coverage estimates with
//!   deterministic per-replicate random streams.
//! - [`cli`]: the batch driver behind the `predmatch` binary and the
//!   one-shot verification suite.
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod cli;
pub mod config;
pub mod coverage;
pub mod error;
pub mod family;
pub mod fisher;
pub mod hpd_match;
pub mod numerics;
pub mod quantile_match;
pub mod report;

pub use error::{Error, Result};
pub use family::{builtin_family, builtin_family_names, ParametricFamily, PriorField};
pub use numerics::NumericsConfig;

/// Toolkit version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
