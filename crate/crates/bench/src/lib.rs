//! Experiment harness for the tensor methods: configs, traces, rate fits,
//! bound comparisons and plots.

pub mod compare;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod plot;
pub mod registry;
pub mod theory;
pub mod trace;

pub use error::{BenchError, Result};
