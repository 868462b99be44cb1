//! Voxel grid geometry: dimensions, physical spacing and the voxel-to-mm
//! affine map.

use alloc::format;

use crate::error::{CoreError, Result};

/// Tolerance for agreement between `spacing` and the affine column norms (mm).
pub const SPACING_AFFINE_TOL: f64 = 1e-4;

/// A 3D voxel lattice with physical geometry.
///
/// `affine` maps homogeneous voxel indices `(i, j, k, 1)` to physical
/// millimeter coordinates. Data attached to a grid is stored x-fastest:
/// linear index `i + dims[0] * (j + dims[1] * k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    dims: [usize; 3],
    spacing: [f64; 3],
    affine: [[f64; 4]; 4],
    inverse: [[f64; 4]; 4],
}

impl VoxelGrid {
    /// Axis-aligned grid: diagonal affine with the given spacing, no offset.
    pub fn from_spacing(dims: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        Self::from_spacing_offset(dims, spacing, [0.0; 3])
    }

    /// Axis-aligned grid with a physical translation of voxel (0,0,0).
    pub fn from_spacing_offset(dims: [usize; 3], spacing: [f64; 3], offset: [f64; 3]) -> Result<Self> {
        let mut affine = [[0.0; 4]; 4];
        for a in 0..3 {
            affine[a][a] = spacing[a];
            affine[a][3] = offset[a];
        }
        affine[3][3] = 1.0;
        Self::from_affine(dims, affine)
    }

    /// General grid from a full 4x4 affine; spacing is taken as the column
    /// norms of the 3x3 block.
    pub fn from_affine(dims: [usize; 3], affine: [[f64; 4]; 4]) -> Result<Self> {
        let mut spacing = [0.0; 3];
        for c in 0..3 {
            let n = libm::sqrt(
                affine[0][c] * affine[0][c] + affine[1][c] * affine[1][c] + affine[2][c] * affine[2][c],
            );
            spacing[c] = n;
        }
        Self::from_affine_spacing(dims, affine, spacing)
    }

    /// General grid where spacing is stated independently (e.g. from a file
    /// header) and must agree with the affine column norms.
    pub fn from_affine_spacing(dims: [usize; 3], affine: [[f64; 4]; 4], spacing: [f64; 3]) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(CoreError::InvalidGrid(format!("all dims must be >= 1, got {dims:?}")));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(CoreError::InvalidGrid(format!("all spacing entries must be > 0, got {spacing:?}")));
        }
        for c in 0..3 {
            let n = libm::sqrt(
                affine[0][c] * affine[0][c] + affine[1][c] * affine[1][c] + affine[2][c] * affine[2][c],
            );
            if libm::fabs(n - spacing[c]) > SPACING_AFFINE_TOL {
                return Err(CoreError::InvalidGrid(format!(
                    "affine column {c} norm {n} disagrees with spacing {}",
                    spacing[c]
                )));
            }
        }
        let inverse = invert_affine(&affine)
            .ok_or_else(|| CoreError::InvalidGrid("affine is not invertible".into()))?;
        Ok(Self { dims, spacing, affine, inverse })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn affine(&self) -> &[[f64; 4]; 4] {
        &self.affine
    }

    /// Mean spacing across the three axes (mm).
    pub fn mean_spacing(&self) -> f64 {
        (self.spacing[0] + self.spacing[1] + self.spacing[2]) / 3.0
    }

    /// Physical volume of a single voxel (mm^3).
    pub fn voxel_volume(&self) -> f64 {
        self.spacing[0] * self.spacing[1] * self.spacing[2]
    }

    /// Total number of voxels.
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Linear index of voxel (x, y, z), x-fastest.
    #[inline]
    pub fn linear(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    /// Inverse of [`linear`](Self::linear).
    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let x = idx % self.dims[0];
        let rest = idx / self.dims[0];
        [x, rest % self.dims[1], rest / self.dims[1]]
    }

    /// Map a (possibly fractional) voxel index to physical mm coordinates.
    pub fn voxel_to_physical(&self, index: [f64; 3]) -> [f64; 3] {
        apply_affine(&self.affine, index)
    }

    /// Map a physical mm point to continuous voxel coordinates.
    pub fn physical_to_voxel(&self, point: [f64; 3]) -> [f64; 3] {
        apply_affine(&self.inverse, point)
    }

    /// Physical center of an integer voxel.
    pub fn voxel_center(&self, v: [usize; 3]) -> [f64; 3] {
        self.voxel_to_physical([v[0] as f64, v[1] as f64, v[2] as f64])
    }

    /// True when both grids have identical dims, spacing and affine.
    pub fn same_geometry(&self, other: &VoxelGrid) -> bool {
        self.dims == other.dims && self.spacing == other.spacing && self.affine == other.affine
    }
}

fn apply_affine(m: &[[f64; 4]; 4], p: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for r in 0..3 {
        out[r] = m[r][0] * p[0] + m[r][1] * p[1] + m[r][2] * p[2] + m[r][3];
    }
    out
}

/// Invert a 4x4 affine whose last row is (0, 0, 0, 1).
fn invert_affine(m: &[[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let a = [
        [m[0][0], m[0][1], m[0][2]],
        [m[1][0], m[1][1], m[1][2]],
        [m[2][0], m[2][1], m[2][2]],
    ];
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if !det.is_finite() || libm::fabs(det) < 1e-12 {
        return None;
    }
    let inv = [
        [
            (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det,
            (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det,
            (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det,
        ],
        [
            (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det,
            (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det,
            (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det,
        ],
        [
            (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det,
            (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det,
            (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det,
        ],
    ];
    let t = [m[0][3], m[1][3], m[2][3]];
    let mut out = [[0.0; 4]; 4];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = inv[r][c];
        }
        out[r][3] = -(inv[r][0] * t[0] + inv[r][1] * t[1] + inv[r][2] * t[2]);
    }
    out[3][3] = 1.0;
    Some(out)
}
