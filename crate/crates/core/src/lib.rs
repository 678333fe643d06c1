//! Online influence analysis for transaction cost analysis.
//!
//! At every time slice the engine receives, for each active trading order, a
//! handful of market descriptors and a performance evaluation. It enriches the
//! descriptors with rarity scores and anomaly intensities (peaks/crenels,
//! jumps, trend changes), binarizes performance at a low quantile, and ranks
//! single factors and factor pairs by the predictive power of the best
//! two-sided threshold predictor of degraded performance.
//!
//! Module map:
//!
//! - [`portfolio`] and [`synth`]: data model, CSV ingestion, seeded synthetic portfolios
//! - [`scores`]: trailing-window empirical CDF rarity scores
//! - [`detectors`]: median baseline, the three anomaly detectors and smoothing
//! - [`predictors`]: binarization, confusion tables, quality functionals, MIR
//! - [`influence`]: two-sided threshold search, level-set predictors, pair fusion
//! - [`engine`]: factor enrichment, per-slice analysis, reports and evaluation

// `!(x > 0.0)` style checks are used on purpose to reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detectors;
pub mod engine;
pub mod error;
pub mod influence;
pub mod portfolio;
pub mod predictors;
pub mod scores;
pub mod synth;

pub use error::{Error, Result};
