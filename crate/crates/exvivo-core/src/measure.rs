//! Regional volumes, WMH normalization and ICV imputation.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::volume::LabelMap;

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeResult {
    pub label: String,
    pub voxel_count: usize,
    pub volume_mm3: f64,
    pub icv_mm3: Option<f64>,
    /// volume / ICV, dimensionless; present iff ICV was given.
    pub icv_adjusted: Option<f64>,
}

/// Voxel count and physical volume of one label, optionally ICV-adjusted.
pub fn region_volume(map: &LabelMap, label_id: u32, icv_mm3: Option<f64>) -> Result<VolumeResult> {
    let name = map
        .dictionary
        .get(&label_id)
        .ok_or(CoreError::UnknownLabel(label_id))?
        .clone();
    let voxel_count = map.labels.iter().filter(|&&l| l == label_id).count();
    let volume_mm3 = voxel_count as f64 * map.grid.voxel_volume();
    Ok(VolumeResult {
        label: name,
        voxel_count,
        volume_mm3,
        icv_mm3,
        icv_adjusted: icv_mm3.map(|icv| volume_mm3 / icv),
    })
}

/// WMH volume divided by WM volume (dimensionless).
pub fn normalized_wmh_volume(map: &LabelMap, wmh_id: u32, wm_id: u32) -> Result<f64> {
    let wmh = region_volume(map, wmh_id, None)?;
    let wm = region_volume(map, wm_id, None)?;
    if wm.voxel_count == 0 {
        return Err(CoreError::UndefinedNormalization("WM volume is zero".into()));
    }
    Ok(wmh.volume_mm3 / wm.volume_mm3)
}

/// Replace missing ICV entries by the mean of the present ones.
pub fn impute_icv(per_subject: &[Option<f64>]) -> Result<Vec<f64>> {
    let present: Vec<f64> = per_subject.iter().filter_map(|v| *v).collect();
    if present.is_empty() {
        return Err(CoreError::InsufficientData("no ICV values to impute from".into()));
    }
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    Ok(per_subject.iter().map(|v| v.unwrap_or(mean)).collect())
}
