//! Adversarial training for linear logistic regression, with exact
//! weight-space Hessians and filter-normalized loss-landscape sweeps.
//!
//! The crate provides:
//!
//! - IDX/MNIST ingestion, a two-digit binary subset, and synthetic tasks
//!   ([`data`]);
//! - the logistic loss, analytic gradient, exact Hessian, and the
//!   magnitude/direction decomposition of the adversarial loss ([`model`]);
//! - PGD and closed-form adversaries plus uniform random noise
//!   ([`perturb`]);
//! - standard / adversarial / random-noise training loops ([`train`]);
//! - 1-D filter-normalized landscape sweeps ([`landscape`]);
//! - Hessian eigensolvers and the sharpness-vs-epsilon scans ([`spectrum`]);
//! - CSV/SVG artifact writers ([`report`]), the JSON experiment config
//!   ([`config`]), and a self-contained verification suite ([`verify`]).
//!
//! Everything is deterministic under the configured seeds: random draws go
//! through counter-based per-sample streams and floating-point reductions
//! use a fixed association order.

pub mod config;
pub mod data;
mod error;
pub mod landscape;
pub mod model;
pub mod numdiff;
pub mod perturb;
pub mod report;
pub mod rng;
pub mod spectrum;
pub mod train;
pub mod verify;

mod reduce;

pub use error::{Error, Result};
