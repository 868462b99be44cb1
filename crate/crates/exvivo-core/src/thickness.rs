//! Landmark-localized cortical thickness by maximal inscribed spheres.
//!
//! The thickness at a landmark is the diameter of the largest sphere that
//! fits inside the foreground segmentation while containing the landmark.
//! The sphere is located directly on the distance transform: among voxels
//! whose boundary radius covers the landmark, take the one with the largest
//! radius.

use alloc::string::String;
use alloc::vec::Vec;

use crate::edt::distance_transform;
use crate::error::{CoreError, Result};
use crate::volume::Mask;

/// The 16 cortical landmark names used in the rating/thickness tables.
pub const CANONICAL_LANDMARKS: [&str; 16] = [
    "visual",
    "motor",
    "posterior_cingulate",
    "midfrontal",
    "anterior_cingulate",
    "orbitofrontal",
    "superior_temporal",
    "inferior_frontal",
    "anterior_insula",
    "anterior_temporal",
    "ventrolateral_temporal",
    "superior_parietal",
    "angular_gyrus",
    "entorhinal_cortex",
    "ba35",
    "parahippocampal_cortex",
];

/// Named physical-space landmark.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmark {
    pub name: String,
    pub point: [f64; 3],
}

/// A set of uniquely-named landmarks.
#[derive(Debug, Clone, Default)]
pub struct LandmarkSet {
    pub entries: Vec<Landmark>,
}

impl LandmarkSet {
    pub fn new(entries: Vec<Landmark>) -> Result<Self> {
        for (i, a) in entries.iter().enumerate() {
            if a.point.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::InvalidVolume(alloc::format!(
                    "landmark '{}' has a non-finite coordinate",
                    a.name
                )));
            }
            if entries[..i].iter().any(|b| b.name == a.name) {
                return Err(CoreError::InvalidVolume(alloc::format!("duplicate landmark name '{}'", a.name)));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, name: &str) -> Option<&Landmark> {
        self.entries.iter().find(|l| l.name == name)
    }
}

/// Tunable measurement parameters.
#[derive(Debug, Clone, Copy)]
pub struct ThicknessParams {
    /// Search window around the landmark, mm.
    pub search_radius_mm: f64,
    /// Maximum snap distance for landmarks that fall on background, mm.
    pub snap_tolerance_mm: f64,
}

impl Default for ThicknessParams {
    fn default() -> Self {
        Self { search_radius_mm: 20.0, snap_tolerance_mm: 1.0 }
    }
}

/// Result of one landmark measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ThicknessResult {
    pub thickness_mm: f64,
    pub sphere_center: [f64; 3],
    pub sphere_radius_mm: f64,
    pub snapped: bool,
    pub snap_distance_mm: f64,
    /// Set when no sphere covering the landmark exists and the measurement
    /// fell back to the radius at the landmark voxel itself.
    pub thin_region: bool,
}

/// Measure thickness at one landmark on a precomputed distance transform.
///
/// `distance` must be `distance_transform(gm_mask)` on the same grid; passing
/// it in lets callers measure many landmarks from one transform.
pub fn inscribed_sphere_thickness_with(
    gm_mask: &Mask,
    distance: &[f64],
    landmark: [f64; 3],
    params: &ThicknessParams,
) -> Result<ThicknessResult> {
    if !gm_mask.any() {
        return Err(CoreError::InvalidVolume("empty foreground mask".into()));
    }
    let grid = &gm_mask.grid;
    let half = grid.mean_spacing() / 2.0;
    let radius_at = |idx: usize| (distance[idx] - half).max(0.0);

    // effective landmark: the point itself if its voxel is foreground,
    // otherwise the nearest foreground voxel center within the snap tolerance
    let cont = grid.physical_to_voxel(landmark);
    let rounded = round_to_voxel(grid.dims(), cont);
    let on_foreground = rounded.map(|v| gm_mask.data[grid.linear(v[0], v[1], v[2])]).unwrap_or(false);

    let (effective, anchor_voxel, snapped, snap_distance) = if on_foreground {
        let v = rounded.unwrap();
        (landmark, v, false, 0.0)
    } else {
        let (voxel, dist) = nearest_foreground(gm_mask, landmark, params.search_radius_mm)
            .ok_or(CoreError::LandmarkOutsideSegmentation { distance_mm: f64::INFINITY })?;
        if dist > params.snap_tolerance_mm {
            return Err(CoreError::LandmarkOutsideSegmentation { distance_mm: dist });
        }
        (grid.voxel_center(voxel), voxel, true, dist)
    };

    // scan the search window for the covering center with maximal radius;
    // linear-index order makes tie-breaking deterministic
    let mut best: Option<(f64, usize)> = None;
    for idx in window_indices(grid, effective, params.search_radius_mm) {
        if !gm_mask.data[idx] {
            continue;
        }
        let r = radius_at(idx);
        let c = grid.voxel_center(grid.coords(idx));
        let d = dist3(c, effective);
        if d > params.search_radius_mm || d > r {
            continue;
        }
        if best.map(|(br, _)| r > br).unwrap_or(true) {
            best = Some((r, idx));
        }
    }

    match best {
        Some((r, idx)) => Ok(ThicknessResult {
            thickness_mm: 2.0 * r,
            sphere_center: grid.voxel_center(grid.coords(idx)),
            sphere_radius_mm: r,
            snapped,
            snap_distance_mm: snap_distance,
            thin_region: false,
        }),
        None => {
            let idx = grid.linear(anchor_voxel[0], anchor_voxel[1], anchor_voxel[2]);
            let r = radius_at(idx);
            Ok(ThicknessResult {
                thickness_mm: 2.0 * r,
                sphere_center: grid.voxel_center(anchor_voxel),
                sphere_radius_mm: r,
                snapped,
                snap_distance_mm: snap_distance,
                thin_region: true,
            })
        }
    }
}

/// Convenience wrapper computing the distance transform internally.
pub fn inscribed_sphere_thickness(
    gm_mask: &Mask,
    landmark: [f64; 3],
    params: &ThicknessParams,
) -> Result<ThicknessResult> {
    let d = distance_transform(gm_mask);
    inscribed_sphere_thickness_with(gm_mask, &d.data, landmark, params)
}

fn round_to_voxel(dims: [usize; 3], cont: [f64; 3]) -> Option<[usize; 3]> {
    let mut out = [0usize; 3];
    for a in 0..3 {
        let r = libm::round(cont[a]);
        if r < 0.0 || r >= dims[a] as f64 {
            return None;
        }
        out[a] = r as usize;
    }
    Some(out)
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    libm::sqrt(dx * dx + dy * dy + dz * dz)
}

/// Voxel indices whose centers can lie within `radius_mm` of `point`.
fn window_indices(grid: &crate::grid::VoxelGrid, point: [f64; 3], radius_mm: f64) -> impl Iterator<Item = usize> + '_ {
    let cont = grid.physical_to_voxel(point);
    let dims = grid.dims();
    let spacing = grid.spacing();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        // conservative per-axis margin; exact distances are re-checked inside
        let margin = radius_mm / spacing[a] + 2.0;
        lo[a] = libm::floor(cont[a] - margin).max(0.0) as usize;
        hi[a] = (libm::ceil(cont[a] + margin).max(0.0) as usize).min(dims[a].saturating_sub(1));
    }
    (lo[2]..=hi[2]).flat_map(move |z| {
        (lo[1]..=hi[1]).flat_map(move |y| (lo[0]..=hi[0]).map(move |x| grid.linear(x, y, z)))
    })
}

/// Nearest foreground voxel (by center) to a physical point, searched within
/// `max_radius_mm`; returns the voxel and its distance.
fn nearest_foreground(mask: &Mask, point: [f64; 3], max_radius_mm: f64) -> Option<([usize; 3], f64)> {
    let grid = &mask.grid;
    let mut best: Option<([usize; 3], f64)> = None;
    for idx in window_indices(grid, point, max_radius_mm) {
        if !mask.data[idx] {
            continue;
        }
        let v = grid.coords(idx);
        let d = dist3(grid.voxel_center(v), point);
        if best.map(|(_, bd)| d < bd).unwrap_or(true) {
            best = Some((v, d));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::VoxelGrid;

    fn slab_mask(thick: usize) -> Mask {
        let n = thick + 10;
        let grid = VoxelGrid::from_spacing([n, n, n], [0.3; 3]).unwrap();
        let mut m = Mask::empty(grid);
        for z in 0..n {
            for y in 0..n {
                for x in 5..5 + thick {
                    let i = m.grid.linear(x, y, z);
                    m.data[i] = true;
                }
            }
        }
        m
    }

    #[test]
    fn slab_thickness_within_one_voxel() {
        let m = slab_mask(5);
        let mid = m.grid.voxel_center([7, 7, 7]);
        let r = inscribed_sphere_thickness(&m, mid, &ThicknessParams::default()).unwrap();
        assert!((r.thickness_mm - 1.5).abs() <= 0.3, "thickness {}", r.thickness_mm);
        assert!(!r.snapped);
        assert!(!r.thin_region);
        // landmark inside the sphere
        let d = super::dist3(r.sphere_center, mid);
        assert!(d <= r.sphere_radius_mm + 1e-6);
    }

    #[test]
    fn background_landmark_snaps_within_tolerance() {
        let m = slab_mask(5);
        // 2 voxels (0.6 mm) outside the slab along x
        let lm = m.grid.voxel_center([3, 7, 7]);
        let r = inscribed_sphere_thickness(&m, lm, &ThicknessParams::default()).unwrap();
        assert!(r.snapped);
        assert!((r.snap_distance_mm - 0.6).abs() < 1e-9);
        assert!((r.thickness_mm - 1.5).abs() <= 0.3);
    }

    #[test]
    fn far_landmark_is_an_error() {
        let m = slab_mask(3);
        let lm = [-5.0, 2.0, 2.0]; // 5+ mm from any foreground
        let err = inscribed_sphere_thickness(&m, lm, &ThicknessParams::default()).unwrap_err();
        match err {
            CoreError::LandmarkOutsideSegmentation { distance_mm } => assert!(distance_mm > 1.0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn duplicate_landmark_names_rejected() {
        let mk = |n: &str| Landmark { name: n.into(), point: [0.0; 3] };
        assert!(LandmarkSet::new(alloc::vec![mk("a"), mk("a")]).is_err());
        assert!(LandmarkSet::new(alloc::vec![mk("a"), mk("b")]).is_ok());
    }
}
