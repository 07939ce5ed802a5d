//! Emotion score estimation from footstep-induced floor vibration.
//!
//! The pipeline runs in four stages:
//!
//! ```text
//! signal -> preprocess (segment, de-clip) -> features -> model (+ pruning)
//!        -> personalize (gait-similarity weighted fine-tuning) -> harness
//! ```
//!
//! [`signal::population`] provides a synthetic multi-walker corpus used by the
//! tests and the command-line `synth` command.

pub mod config;
pub mod diag;
pub mod dsp;
pub mod error;
pub mod features;
pub mod harness;
pub mod model;
pub mod parallel;
pub mod personalize;
pub mod pipeline;
pub mod preprocess;
pub mod pruning;
pub mod signal;

pub use error::{Error, Result};
