//! Segmentation-quality metrics: Dice coefficient and 95th-percentile
//! Hausdorff distance between boundary voxel sets.

use alloc::string::String;
use alloc::vec::Vec;

use crate::edt::distance_to_nearest;
use crate::error::{CoreError, Result};
use crate::volume::{LabelMap, Mask};

/// Dice similarity coefficient 2|A∩B| / (|A|+|B|); both-empty is 1.0.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    if !a.grid.same_geometry(&b.grid) {
        return Err(CoreError::GridMismatch);
    }
    let mut inter = 0usize;
    let mut total = 0usize;
    for (&x, &y) in a.data.iter().zip(b.data.iter()) {
        inter += (x && y) as usize;
        total += x as usize + y as usize;
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Foreground voxels with at least one face-adjacent background neighbor;
/// voxels on the volume edge count as boundary.
pub fn boundary(mask: &Mask) -> Mask {
    let grid = &mask.grid;
    let [nx, ny, nz] = grid.dims();
    let mut out = Mask::empty(grid.clone());
    for idx in 0..mask.data.len() {
        if !mask.data[idx] {
            continue;
        }
        let [x, y, z] = grid.coords(idx);
        let exposed = x == 0
            || y == 0
            || z == 0
            || x == nx - 1
            || y == ny - 1
            || z == nz - 1
            || !mask.data[grid.linear(x - 1, y, z)]
            || !mask.data[grid.linear(x + 1, y, z)]
            || !mask.data[grid.linear(x, y - 1, z)]
            || !mask.data[grid.linear(x, y + 1, z)]
            || !mask.data[grid.linear(x, y, z - 1)]
            || !mask.data[grid.linear(x, y, z + 1)];
        if exposed {
            out.data[idx] = true;
        }
    }
    out
}

/// 95th-percentile symmetric Hausdorff distance in mm: the max of the two
/// directed 95th percentiles over boundary voxel sets. `Ok(None)` when
/// either mask is empty.
pub fn hd95(a: &Mask, b: &Mask) -> Result<Option<f64>> {
    if !a.grid.same_geometry(&b.grid) {
        return Err(CoreError::GridMismatch);
    }
    if !a.any() || !b.any() {
        return Ok(None);
    }
    let ba = boundary(a);
    let bb = boundary(b);
    let d_ab = directed_percentile(&ba, &bb);
    let d_ba = directed_percentile(&bb, &ba);
    Ok(Some(d_ab.max(d_ba)))
}

/// 95th percentile of distances from each `from`-boundary voxel to the
/// nearest `to`-boundary voxel.
fn directed_percentile(from: &Mask, to: &Mask) -> f64 {
    let field = distance_to_nearest(&from.grid, &to.data);
    let mut dists: Vec<f64> = from
        .data
        .iter()
        .zip(field.data.iter())
        .filter_map(|(&f, &d)| f.then_some(d))
        .collect();
    dists.sort_by(|x, y| x.partial_cmp(y).unwrap());
    percentile_linear(&dists, 0.95)
}

/// Percentile by linear interpolation on sorted values.
pub fn percentile_linear(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(h) as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMetrics {
    pub label_id: u32,
    pub label: String,
    pub dsc: f64,
    pub hd95_mm: Option<f64>,
    /// Label absent from both maps: dsc reported as 1.0, hd95 undefined.
    pub absent_in_both: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_label: Vec<LabelMetrics>,
    pub dsc_mean: f64,
    pub dsc_sd: f64,
    pub hd95_mean: Option<f64>,
    pub hd95_sd: Option<f64>,
}

/// Per-label Dice and HD95 between a candidate and a reference label map,
/// with mean ± sd aggregates.
pub fn evaluate_labels(candidate: &LabelMap, reference: &LabelMap, labels: &[u32]) -> Result<MetricsReport> {
    if !candidate.grid.same_geometry(&reference.grid) {
        return Err(CoreError::GridMismatch);
    }
    let mut per_label = Vec::with_capacity(labels.len());
    for &id in labels {
        let name = reference
            .dictionary
            .get(&id)
            .or_else(|| candidate.dictionary.get(&id))
            .cloned()
            .ok_or(CoreError::UnknownLabel(id))?;
        let ca = candidate.mask_of(id);
        let re = reference.mask_of(id);
        let absent = !ca.any() && !re.any();
        per_label.push(LabelMetrics {
            label_id: id,
            label: name,
            dsc: dice(&ca, &re)?,
            hd95_mm: hd95(&ca, &re)?,
            absent_in_both: absent,
        });
    }
    let dscs: Vec<f64> = per_label.iter().map(|m| m.dsc).collect();
    let hds: Vec<f64> = per_label.iter().filter_map(|m| m.hd95_mm).collect();
    let (dsc_mean, dsc_sd) = mean_sd(&dscs);
    let (hd95_mean, hd95_sd) = if hds.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_sd(&hds);
        (Some(m), Some(s))
    };
    Ok(MetricsReport { per_label, dsc_mean, dsc_sd, hd95_mean, hd95_sd })
}

/// Mean and sample standard deviation (sd 0 for fewer than two values).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}
