//! Traffic-signal outlier detection and classification.

pub mod adaboost;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod signal;
pub mod simulator;
pub mod svm;

pub use error::{Error, Result};
