//! Deterministic synthetic volumes with analytic ground truth.
//!
//! Each phantom is generated by direct voxel-center enumeration, so its
//! ground-truth record (thickness, per-label counts, component count) is the
//! independent oracle for the geometric operations.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{CoreError, Result};
use crate::grid::VoxelGrid;
use crate::volume::LabelMap;

pub const LABEL_GM: u32 = 1;
pub const LABEL_WM: u32 = 2;
pub const LABEL_WMH: u32 = 3;
pub const LABEL_CAUDATE: u32 = 4;
pub const LABEL_PUTAMEN: u32 = 5;
pub const LABEL_GLOBUS_PALLIDUS: u32 = 6;
pub const LABEL_THALAMUS: u32 = 7;

/// The 7-class label dictionary used across the toolkit.
pub fn standard_dictionary() -> BTreeMap<u32, String> {
    let mut d = BTreeMap::new();
    d.insert(LABEL_GM, "GM".to_string());
    d.insert(LABEL_WM, "WM".to_string());
    d.insert(LABEL_WMH, "WMH".to_string());
    d.insert(LABEL_CAUDATE, "caudate".to_string());
    d.insert(LABEL_PUTAMEN, "putamen".to_string());
    d.insert(LABEL_GLOBUS_PALLIDUS, "globus_pallidus".to_string());
    d.insert(LABEL_THALAMUS, "thalamus".to_string());
    d
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhantomKind {
    /// Slab of GM spanning the full lateral extent, `thickness_vox` voxels
    /// thick along x.
    Slab { thickness_vox: usize },
    /// Hollow GM sphere: voxel centers with r_in - 1/2 < d <= r_out - 1/2
    /// (voxel units). The half-voxel offset keeps the discretized band
    /// r_out - r_in voxels wide along the axes, so the maximal inscribed
    /// sphere stays within one voxel of the analytic thickness; testing
    /// against integer radii lets diagonal staircase voxels poke into
    /// odd-width bands and bias the inscribed sphere low.
    SphericalShell { r_in_vox: usize, r_out_vox: usize },
    /// Solid cube of one label.
    Cube { side_vox: usize, label: u32 },
    /// Two cubes of GM separated by `gap_vox` background voxels along x.
    TwoCubes { side_vox: usize, gap_vox: usize },
    /// GM shell around a WM ball with four subcortical cubes and seeded WMH
    /// blobs inside the WM.
    MultilabelHemisphereToy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub spacing: [f64; 3],
    pub seed: u64,
}

/// Analytic ground truth attached to a generated phantom.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// True thickness at the suggested landmark, when the phantom has one.
    pub thickness_mm: Option<f64>,
    /// Physical-space landmark placed where the thickness is analytic.
    pub landmark_mm: Option<[f64; 3]>,
    pub label_counts: BTreeMap<u32, usize>,
    /// Connected components of the whole foreground (26-connectivity).
    pub component_count: usize,
}

const PAD: usize = 3; // background padding so EDT boundary conditions never clip
const MAX_DIM: usize = 512;

pub fn generate(spec: &PhantomSpec) -> Result<(LabelMap, GroundTruth)> {
    if spec.spacing.iter().any(|&s| !(s > 0.0)) {
        return Err(CoreError::PhantomOutOfBounds("spacing must be positive".into()));
    }
    match spec.kind {
        PhantomKind::Slab { thickness_vox } => slab(spec, thickness_vox),
        PhantomKind::SphericalShell { r_in_vox, r_out_vox } => shell(spec, r_in_vox, r_out_vox),
        PhantomKind::Cube { side_vox, label } => cube(spec, side_vox, label),
        PhantomKind::TwoCubes { side_vox, gap_vox } => two_cubes(spec, side_vox, gap_vox),
        PhantomKind::MultilabelHemisphereToy => hemisphere_toy(spec),
    }
}

fn check_dims(dims: [usize; 3]) -> Result<()> {
    if dims.iter().any(|&d| d == 0 || d > MAX_DIM) {
        return Err(CoreError::PhantomOutOfBounds(alloc::format!(
            "derived grid {dims:?} outside 1..={MAX_DIM}"
        )));
    }
    Ok(())
}

fn count_labels(labels: &[u32]) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for &l in labels {
        if l != 0 {
            *counts.entry(l).or_insert(0) += 1;
        }
    }
    counts
}

fn slab(spec: &PhantomSpec, k: usize) -> Result<(LabelMap, GroundTruth)> {
    if k == 0 {
        return Err(CoreError::PhantomOutOfBounds("slab thickness must be >= 1".into()));
    }
    let lateral = (k + 2 * PAD).max(13);
    let dims = [k + 2 * PAD, lateral, lateral];
    check_dims(dims)?;
    let grid = VoxelGrid::from_spacing(dims, spec.spacing)?;
    let mut labels = vec![0u32; grid.len()];
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in PAD..PAD + k {
                labels[grid.linear(x, y, z)] = LABEL_GM;
            }
        }
    }
    let counts = count_labels(&labels);
    let center = [
        PAD as f64 + (k as f64 - 1.0) / 2.0,
        (dims[1] - 1) as f64 / 2.0,
        (dims[2] - 1) as f64 / 2.0,
    ];
    let gt = GroundTruth {
        thickness_mm: Some(k as f64 * spec.spacing[0]),
        landmark_mm: Some(grid.voxel_to_physical(center)),
        label_counts: counts,
        component_count: 1,
    };
    Ok((LabelMap::new(grid, labels, standard_dictionary())?, gt))
}

fn shell(spec: &PhantomSpec, r_in: usize, r_out: usize) -> Result<(LabelMap, GroundTruth)> {
    if r_in == 0 || r_in >= r_out {
        return Err(CoreError::PhantomOutOfBounds("need 1 <= r_in < r_out".into()));
    }
    let c = r_out + PAD;
    let dims = [2 * c + 1; 3];
    check_dims(dims)?;
    let grid = VoxelGrid::from_spacing(dims, spec.spacing)?;
    let mut labels = vec![0u32; grid.len()];
    // compare 4*d^2 against (2r - 1)^2 to keep the half-offset test integral
    let (r_in2, r_out2) = (sq(2 * r_in as i64 - 1), sq(2 * r_out as i64 - 1));
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let d2 = sq(x as i64 - c as i64) + sq(y as i64 - c as i64) + sq(z as i64 - c as i64);
                if 4 * d2 <= r_out2 && 4 * d2 > r_in2 {
                    labels[grid.linear(x, y, z)] = LABEL_GM;
                }
            }
        }
    }
    let counts = count_labels(&labels);
    let mid = c as f64 + (r_in as f64 + r_out as f64) / 2.0 - 0.5;
    let mean_spacing = grid.mean_spacing();
    let gt = GroundTruth {
        thickness_mm: Some((r_out - r_in) as f64 * mean_spacing),
        landmark_mm: Some(grid.voxel_to_physical([mid, c as f64, c as f64])),
        label_counts: counts,
        component_count: 1,
    };
    Ok((LabelMap::new(grid, labels, standard_dictionary())?, gt))
}

fn cube(spec: &PhantomSpec, side: usize, label: u32) -> Result<(LabelMap, GroundTruth)> {
    if side == 0 || label == 0 {
        return Err(CoreError::PhantomOutOfBounds("cube needs side >= 1 and a nonzero label".into()));
    }
    let dims = [side + 2 * PAD; 3];
    check_dims(dims)?;
    let grid = VoxelGrid::from_spacing(dims, spec.spacing)?;
    let mut labels = vec![0u32; grid.len()];
    for z in PAD..PAD + side {
        for y in PAD..PAD + side {
            for x in PAD..PAD + side {
                labels[grid.linear(x, y, z)] = label;
            }
        }
    }
    let mut dict = standard_dictionary();
    dict.entry(label).or_insert_with(|| alloc::format!("label_{label}"));
    let counts = count_labels(&labels);
    let center = [(dims[0] - 1) as f64 / 2.0; 3];
    let gt = GroundTruth {
        thickness_mm: Some(side as f64 * grid.mean_spacing()),
        landmark_mm: Some(grid.voxel_to_physical(center)),
        label_counts: counts,
        component_count: 1,
    };
    Ok((LabelMap::new(grid, labels, dict)?, gt))
}

fn two_cubes(spec: &PhantomSpec, side: usize, gap: usize) -> Result<(LabelMap, GroundTruth)> {
    if side == 0 || gap == 0 {
        return Err(CoreError::PhantomOutOfBounds("two_cubes needs side >= 1 and gap >= 1".into()));
    }
    let dims = [2 * side + gap + 2 * PAD, side + 2 * PAD, side + 2 * PAD];
    check_dims(dims)?;
    let grid = VoxelGrid::from_spacing(dims, spec.spacing)?;
    let mut labels = vec![0u32; grid.len()];
    for z in PAD..PAD + side {
        for y in PAD..PAD + side {
            for x in PAD..PAD + side {
                labels[grid.linear(x, y, z)] = LABEL_GM;
                labels[grid.linear(x + side + gap, y, z)] = LABEL_GM;
            }
        }
    }
    let counts = count_labels(&labels);
    let gt = GroundTruth {
        thickness_mm: None,
        landmark_mm: None,
        label_counts: counts,
        component_count: 2,
    };
    Ok((LabelMap::new(grid, labels, standard_dictionary())?, gt))
}

fn hemisphere_toy(spec: &PhantomSpec) -> Result<(LabelMap, GroundTruth)> {
    let (r_in, r_out) = (12i64, 16i64);
    let c = (r_out as usize) + PAD;
    let dims = [2 * c + 1; 3];
    check_dims(dims)?;
    let grid = VoxelGrid::from_spacing(dims, spec.spacing)?;
    let mut labels = vec![0u32; grid.len()];
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let d2 = sq(x as i64 - c as i64) + sq(y as i64 - c as i64) + sq(z as i64 - c as i64);
                let idx = grid.linear(x, y, z);
                // same half-voxel-offset radius test as the plain shell
                if 4 * d2 <= sq(2 * r_in - 1) {
                    labels[idx] = LABEL_WM;
                } else if 4 * d2 <= sq(2 * r_out - 1) {
                    labels[idx] = LABEL_GM;
                }
            }
        }
    }
    // four 3^3 subcortical cubes on the axes, well inside the WM ball
    let sub = [LABEL_CAUDATE, LABEL_PUTAMEN, LABEL_GLOBUS_PALLIDUS, LABEL_THALAMUS];
    let offsets = [[5i64, 0, 0], [-5, 0, 0], [0, 5, 0], [0, -5, 0]];
    for (label, off) in sub.iter().zip(offsets.iter()) {
        for dz in -1i64..=1 {
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let x = (c as i64 + off[0] + dx) as usize;
                    let y = (c as i64 + off[1] + dy) as usize;
                    let z = (c as i64 + off[2] + dz) as usize;
                    labels[grid.linear(x, y, z)] = *label;
                }
            }
        }
    }
    // seeded single-voxel WMH speckles inside remaining WM
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut placed = 0;
    while placed < 20 {
        let x = (rng.next_u32() as usize) % dims[0];
        let y = (rng.next_u32() as usize) % dims[1];
        let z = (rng.next_u32() as usize) % dims[2];
        let idx = grid.linear(x, y, z);
        if labels[idx] == LABEL_WM {
            labels[idx] = LABEL_WMH;
            placed += 1;
        }
    }
    let counts = count_labels(&labels);
    let mid = c as f64 + (r_in as f64 + r_out as f64) / 2.0 - 0.5;
    let gt = GroundTruth {
        thickness_mm: Some((r_out - r_in) as f64 * grid.mean_spacing()),
        landmark_mm: Some(grid.voxel_to_physical([mid, c as f64, c as f64])),
        label_counts: counts,
        component_count: 1,
    };
    Ok((LabelMap::new(grid, labels, standard_dictionary())?, gt))
}

#[inline]
fn sq(v: i64) -> i64 {
    v * v
}
