//! Benchmark framework for machine unlearning on classifiers.
//!
//! - [`data`]: datasets and retain/forget splits for full-class, sub-class and
//!   random forgetting.
//! - [`model`]: MLP classifiers, training, Fisher diagonals, checkpoints.
//! - [`unlearn`]: retrain, SSD, Mislabel, Incompetent Teacher, SCRUB and UNSIR
//!   behind one calling convention.
//! - [`metrics`]: relative accuracies, ZRF, loss-based MIA.
//! - [`harness`]: config-driven runs, grids, record persistence and tables.

pub mod data;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod unlearn;

pub use error::{Error, Result};
