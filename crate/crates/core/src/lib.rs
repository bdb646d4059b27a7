//! Realised-volatility panels and Logarithmic Multiplicative Error Models
//! for measuring volatility and volume transmission between trading venues.
//!
//! The crate is organised along the processing chain:
//!
//! - [`ingest`]: tick files to a one-second forward-filled grid and
//!   five-minute return windows.
//! - [`rvol`]: pre-averaged, bipower, median and plain realised volatility.
//! - [`prep`]: diurnal adjustment, winsorizing and multi-instrument panels.
//! - [`mem`]: univariate zero-augmented LogMEM(p, q) with QML fitting.
//! - [`vmem`]: equation-by-equation vLogMEM, spillover summaries and
//!   intraday zone interactions.
//! - [`sim`]: seeded simulators for MEM processes and tick paths.
//! - [`export`]: flow graphs, intraday profiles and histograms.
//! - [`pipeline`]: the end-to-end driver used by the CLI.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod export;
pub mod ingest;
pub mod mem;
pub mod optim;
pub mod pipeline;
pub mod prep;
pub mod rvol;
pub mod sim;
pub mod stats;
pub mod vmem;

/// Seconds in one five-minute interval.
pub const INTERVAL_SECONDS: i64 = 300;
/// Five-minute slots in a UTC day.
pub const SLOTS_PER_DAY: usize = 288;
/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: &str = "1";
