//! Bland-Altman agreement between two measurement series.

use alloc::vec::Vec;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BlandAltmanResult {
    pub mean_difference: f64,
    pub sd_difference: f64,
    /// Limits of agreement: mean +- 1.96 * sd.
    pub loa_low: f64,
    pub loa_high: f64,
    pub n: usize,
}

/// Differences a - b over pairwise-complete cases; sample sd (n-1).
pub fn bland_altman(a: &[f64], b: &[f64]) -> Result<BlandAltmanResult> {
    if a.len() != b.len() {
        return Err(CoreError::InsufficientData("series lengths differ".into()));
    }
    let d: Vec<f64> = a
        .iter()
        .zip(b.iter())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| x - y)
        .collect();
    let n = d.len();
    if n < 2 {
        return Err(CoreError::InsufficientData(alloc::format!("need n >= 2 complete pairs, got {n}")));
    }
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = libm::sqrt(var);
    Ok(BlandAltmanResult {
        mean_difference: mean,
        sd_difference: sd,
        loa_low: mean - 1.96 * sd,
        loa_high: mean + 1.96 * sd,
        n,
    })
}
