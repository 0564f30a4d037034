//! Proprioceptive terrain classification and force-torque analysis for
//! wheeled rovers.
//!
//! The pipeline ingests per-sensor force-torque (FTS) and IMU logs
//! ([`telemetry`]), cuts them into fixed windows of summary statistics
//! ([`windows`]), and classifies terrain with a kernel SVM ([`svm`]) or a small
//! dense network ([`mlp`]). [`drawbar`] filters FTS readings by the lever
//! length implied by `tau_y = F_x * L` to find intervals where `F_x` can be read
//! as drawbar pull. [`synth`] generates labelled telemetry with known ground
//! truth, and [`report`] renders tables.

pub mod drawbar;
pub mod error;
pub mod evaluation;
pub mod mlp;
pub mod model_io;
pub mod report;
pub mod scaling;
pub mod svm;
pub mod synth;
pub mod telemetry;
pub mod windows;

pub use error::{Error, Result};
