//! Intensity normalization helpers for network-style preprocessing and the
//! 0-1000 rating convention.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::volume::ImageVolume;

/// Z-score (population sd, n denominator) followed by min-max to [0, 1].
pub fn standardize_minmax(volume: &ImageVolume) -> Result<ImageVolume> {
    let n = volume.data.len() as f64;
    let mean = volume.data.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = volume.data.iter().map(|&v| (v as f64 - mean) * (v as f64 - mean)).sum::<f64>() / n;
    if var == 0.0 {
        return Err(CoreError::DegenerateIntensityRange);
    }
    let sd = libm::sqrt(var);
    let z: Vec<f64> = volume.data.iter().map(|&v| (v as f64 - mean) / sd).collect();
    minmax_to(&z, 1.0, &volume.grid)
}

/// Linear min-max rescale to [0, 1000], no z-scoring.
pub fn rescale_0_1000(volume: &ImageVolume) -> Result<ImageVolume> {
    let z: Vec<f64> = volume.data.iter().map(|&v| v as f64).collect();
    minmax_to(&z, 1000.0, &volume.grid)
}

fn minmax_to(values: &[f64], top: f64, grid: &crate::grid::VoxelGrid) -> Result<ImageVolume> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Err(CoreError::DegenerateIntensityRange);
    }
    let range = max - min;
    let data: Vec<f32> = values.iter().map(|&v| ((v - min) / range * top) as f32).collect();
    ImageVolume::new(grid.clone(), data)
}
