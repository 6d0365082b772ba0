//! Regularization-based continual learning for human activity recognition.
//!
//! A from-scratch 1-D CNN over raw UCI HAR inertial windows, trained
//! class-incrementally over six rounds with Learning without Forgetting,
//! Elastic Weight Consolidation, or both, and scored with average-accuracy
//! and forgetting metrics.

pub mod bench;
pub mod data;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod regularizers;

pub use error::{Error, Result};
