//! Laboratory for studying optimization behaviour of one-layer graph attention
//! on small sparse star graphs.
//!
//! The crate bundles five GATv2-style model variants, a minimal reverse-mode
//! autodiff engine used both for training and as a gradient oracle, a
//! synthetic relevance dataset generator, the closed-form query-transform
//! gradient with its zero-gradient sign analysis, and the training/metric
//! pipeline that produces per-run and per-sweep reports.

pub mod autodiff;
pub mod dataset;
pub mod gradients;
pub mod graphs;
pub mod metrics;
pub mod models;
pub mod plots;
pub mod training;

mod error;

pub use error::{Error, Result};
