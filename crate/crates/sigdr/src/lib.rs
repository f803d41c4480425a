//! Std companion to `sigdr-core`: synthetic data generators, CSV and JSON
//! formats, parallel Gram assembly, experiment orchestration and benchmarks.

pub mod bench;
pub mod error;
pub mod experiment;
pub mod io;
pub mod parallel;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
pub use experiment::{emit_report, run_experiment, ExperimentConfig, MethodName, Report};
pub use sigdr_core as core;
