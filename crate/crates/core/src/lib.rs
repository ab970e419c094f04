//! Two-sample Mendelian randomization with summary statistics, free of
//! winner's-curse bias.
//!
//! Instruments are selected with a randomized z-score rule, their exposure
//! associations are Rao-Blackwellized to undo the selection bias, and the
//! causal effect is estimated by the rerandomized inverse-variance weighted
//! (RIVW) estimator, which also removes measurement-error bias. The crate
//! ships the baseline IVW/dIVW estimators, GWAS summary-statistics ingestion
//! and sigma-based LD pruning, and a Monte Carlo engine for coverage studies.

// Quadrature nodes and reference values are quoted to more digits than f64 holds.
#![allow(clippy::excessive_precision)]

pub mod analysis;
pub mod error;
pub mod estimators;
pub mod gauss;
pub mod gwas_io;
pub mod numeric;
pub mod rng;
pub mod selection;
pub mod simulate;

pub use error::{Error, Result};
