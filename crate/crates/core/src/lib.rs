//! Feature selection by stochastic binary masking (AFS-BM).
//!
//! The crate implements the AFS-BM algorithm — joint model training and
//! stochastic elimination of feature columns through a binary mask — together
//! with everything needed to benchmark it:
//!
//! - [`dataset`]: a dense tabular container with CSV loading, normalization,
//!   splitting, masking, and time-series feature construction;
//! - [`learners`]: self-contained gradient-boosted decision trees and a
//!   multi-layer perceptron (no external ML runtime);
//! - [`selection`]: the AFS-BM loop itself;
//! - [`baselines`]: cross-correlation, mutual-information, and recursive
//!   feature elimination selectors;
//! - [`synthetic`]: a nonlinear synthetic regression benchmark generator;
//! - [`metrics`]: losses and loss-sequence averaging;
//! - [`harness`]: grid-search experiment driver with JSON reports.
//!
//! All randomness flows through explicitly seeded [`rand_chacha::ChaCha8Rng`]
//! generators, so every public entry point is deterministic given its inputs
//! and seeds.

pub mod baselines;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod selection;
pub mod synthetic;

pub use error::{Error, Result};
