//! Std companion to `exvivo-core`: NIfTI-1 I/O, CSV/JSON report formats,
//! study configuration, and the batch pipeline behind the `exvivo` binary.

pub mod config;
pub mod csvio;
pub mod error;
pub mod nifti;
pub mod pipeline;
pub mod sigfmt;

pub use error::{AppError, Result};
