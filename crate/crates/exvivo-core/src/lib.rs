//! Core morphometry and statistics for ex vivo brain MRI volumes.
//!
//! Everything in this crate is a pure function over immutable in-memory
//! volumes: grid geometry, exact anisotropic Euclidean distance transforms,
//! landmark thickness by maximal inscribed spheres, regional volumes,
//! segmentation-quality metrics (Dice, HD95), connected components, the
//! statistical layer (Spearman and partial Spearman with one-sided p-values,
//! ICC, Bland-Altman, Benjamini-Hochberg, Mann-Whitney U), and deterministic
//! synthetic phantoms with analytic ground truth.
//!
//! File formats, compression and the CLI live in the companion `exvivo`
//! crate; this crate is `no_std` + `alloc`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod components;
pub mod edt;
pub mod error;
pub mod grid;
pub mod measure;
pub mod metrics;
pub mod phantom;
pub mod stats;
pub mod thickness;
pub mod volume;

pub use error::{CoreError, Result};
pub use grid::VoxelGrid;
pub use volume::{ImageVolume, LabelMap, Mask};
