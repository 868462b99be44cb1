//! Exact anisotropic Euclidean distance transform.
//!
//! Separable squared-distance lower-envelope algorithm (Felzenszwalb &
//! Huttenlocher), one pass per axis with weight `spacing^2`. The result is
//! the exact center-to-center distance in mm, not a chamfer approximation.

use alloc::vec;
use alloc::vec::Vec;

use crate::grid::VoxelGrid;
use crate::volume::Mask;

/// Per-voxel distance field in mm.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub grid: VoxelGrid,
    pub data: Vec<f64>,
    /// True when the volume contains no background at all; every entry is
    /// then `+inf`.
    pub unbounded: bool,
}

/// Distance from every foreground voxel to the nearest background voxel
/// (center to center, mm). Background voxels map to 0. An all-foreground
/// volume yields `+inf` everywhere with the `unbounded` flag set.
pub fn distance_transform(mask: &Mask) -> DistanceField {
    let seeds: Vec<bool> = mask.data.iter().map(|&b| !b).collect();
    distance_to_nearest(&mask.grid, &seeds)
}

/// Distance from every voxel to the nearest seed voxel (mm). Seed voxels
/// map to 0; no seeds at all yields `+inf` everywhere.
pub fn distance_to_nearest(grid: &VoxelGrid, seeds: &[bool]) -> DistanceField {
    debug_assert_eq!(seeds.len(), grid.len());
    let [nx, ny, nz] = grid.dims();
    let spacing = grid.spacing();
    let unbounded = !seeds.iter().any(|&s| s);

    // squared distances, built up one axis at a time
    let mut sq: Vec<f64> = seeds.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();

    let nmax = nx.max(ny).max(nz);
    let mut line = vec![0.0f64; nmax];
    let mut out = vec![0.0f64; nmax];
    let mut hull_v = vec![0usize; nmax];
    let mut hull_z = vec![0.0f64; nmax + 1];

    // x pass
    let wx = spacing[0] * spacing[0];
    for z in 0..nz {
        for y in 0..ny {
            let base = grid.linear(0, y, z);
            for x in 0..nx {
                line[x] = sq[base + x];
            }
            dt_line(&line[..nx], &mut out[..nx], &mut hull_v, &mut hull_z, wx);
            for x in 0..nx {
                sq[base + x] = out[x];
            }
        }
    }

    // y pass
    let wy = spacing[1] * spacing[1];
    for z in 0..nz {
        for x in 0..nx {
            for y in 0..ny {
                line[y] = sq[grid.linear(x, y, z)];
            }
            dt_line(&line[..ny], &mut out[..ny], &mut hull_v, &mut hull_z, wy);
            for y in 0..ny {
                sq[grid.linear(x, y, z)] = out[y];
            }
        }
    }

    // z pass
    let wz = spacing[2] * spacing[2];
    for y in 0..ny {
        for x in 0..nx {
            for z in 0..nz {
                line[z] = sq[grid.linear(x, y, z)];
            }
            dt_line(&line[..nz], &mut out[..nz], &mut hull_v, &mut hull_z, wz);
            for z in 0..nz {
                sq[grid.linear(x, y, z)] = out[z];
            }
        }
    }

    let data = sq.into_iter().map(libm::sqrt).collect();
    DistanceField { grid: grid.clone(), data, unbounded }
}

#[inline]
fn parabola(q: usize, v: usize, w: f64, fv: f64) -> f64 {
    let d = q as f64 - v as f64;
    d * d * w + fv
}

/// 1D squared-distance transform: out[q] = min_v (q-v)^2 * w + f[v].
///
/// Lower-envelope construction over the finite parabolas. Because envelope
/// boundaries are computed in floating point, the evaluation also checks
/// the two neighboring envelope parabolas so the returned value is the true
/// minimum even when a query sits within rounding distance of a crossing.
fn dt_line(f: &[f64], out: &mut [f64], hull_v: &mut [usize], hull_z: &mut [f64], w: f64) {
    let n = f.len();
    let mut k = 0usize; // number of parabolas in the envelope
    for (q, &fq) in f.iter().enumerate() {
        if fq.is_infinite() {
            continue;
        }
        loop {
            if k == 0 {
                hull_v[0] = q;
                hull_z[0] = f64::NEG_INFINITY;
                hull_z[1] = f64::INFINITY;
                k = 1;
                break;
            }
            let v = hull_v[k - 1];
            let s = intersect(q, fq, v, f[v], w);
            if s <= hull_z[k - 1] {
                k -= 1; // previous parabola never on the envelope
            } else {
                hull_v[k] = q;
                hull_z[k] = s;
                hull_z[k + 1] = f64::INFINITY;
                k += 1;
                break;
            }
        }
    }
    if k == 0 {
        out[..n].fill(f64::INFINITY);
        return;
    }
    let mut j = 0usize;
    for q in 0..n {
        while hull_z[j + 1] < q as f64 {
            j += 1;
        }
        let mut best = parabola(q, hull_v[j], w, f[hull_v[j]]);
        if j > 0 {
            let cand = parabola(q, hull_v[j - 1], w, f[hull_v[j - 1]]);
            if cand < best {
                best = cand;
            }
        }
        if j + 1 < k {
            let cand = parabola(q, hull_v[j + 1], w, f[hull_v[j + 1]]);
            if cand < best {
                best = cand;
            }
        }
        out[q] = best;
    }
}

/// Abscissa where parabola q overtakes parabola v (q > v).
#[inline]
fn intersect(q: usize, fq: f64, v: usize, fv: f64, w: f64) -> f64 {
    let (q, v) = (q as f64, v as f64);
    ((fq + w * q * q) - (fv + w * v * v)) / (2.0 * w * (q - v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Mask;
    use alloc::vec::Vec;

    fn mask_from_fn(dims: [usize; 3], spacing: [f64; 3], f: impl Fn(usize, usize, usize) -> bool) -> Mask {
        let grid = VoxelGrid::from_spacing(dims, spacing).unwrap();
        let mut m = Mask::empty(grid);
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    let idx = m.grid.linear(x, y, z);
                    m.data[idx] = f(x, y, z);
                }
            }
        }
        m
    }

    /// Brute-force oracle with the same term grouping as the separable
    /// passes: ((dx^2*wx + dy^2*wy) + dz^2*wz).
    pub(crate) fn brute_edt(mask: &Mask) -> Vec<f64> {
        let [nx, ny, nz] = mask.grid.dims();
        let sp = mask.grid.spacing();
        let (wx, wy, wz) = (sp[0] * sp[0], sp[1] * sp[1], sp[2] * sp[2]);
        let mut out = vec![0.0f64; mask.data.len()];
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let i = mask.grid.linear(x, y, z);
                    if !mask.data[i] {
                        continue;
                    }
                    let mut best = f64::INFINITY;
                    for bz in 0..nz {
                        for by in 0..ny {
                            for bx in 0..nx {
                                if mask.data[mask.grid.linear(bx, by, bz)] {
                                    continue;
                                }
                                let dx = x as f64 - bx as f64;
                                let dy = y as f64 - by as f64;
                                let dz = z as f64 - bz as f64;
                                let d2 = dx * dx * wx + dy * dy * wy + dz * dz * wz;
                                if d2 < best {
                                    best = d2;
                                }
                            }
                        }
                    }
                    out[i] = libm::sqrt(best);
                }
            }
        }
        out
    }

    #[test]
    fn single_foreground_voxel() {
        let m = mask_from_fn([5, 5, 5], [0.3; 3], |x, y, z| (x, y, z) == (2, 2, 2));
        let d = distance_transform(&m);
        let i = m.grid.linear(2, 2, 2);
        assert!((d.data[i] - 0.3).abs() < 1e-12);
        assert!(!d.unbounded);
    }

    #[test]
    fn background_is_zero() {
        let m = mask_from_fn([6, 6, 6], [0.3; 3], |x, _, _| x >= 2);
        let d = distance_transform(&m);
        for z in 0..6 {
            for y in 0..6 {
                for x in 0..2 {
                    assert_eq!(d.data[m.grid.linear(x, y, z)], 0.0);
                }
            }
        }
    }

    #[test]
    fn slab_center_plane() {
        // 5-voxel slab along x inside padding; center plane 3 voxels from background
        let m = mask_from_fn([9, 9, 9], [0.3; 3], |x, _, _| (2..7).contains(&x));
        let d = distance_transform(&m);
        let i = m.grid.linear(4, 4, 4);
        assert!((d.data[i] - 0.9).abs() < 1e-12, "got {}", d.data[i]);
    }

    #[test]
    fn all_foreground_is_unbounded() {
        let m = mask_from_fn([4, 4, 4], [0.3; 3], |_, _, _| true);
        let d = distance_transform(&m);
        assert!(d.unbounded);
        assert!(d.data.iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn matches_brute_force_exactly_on_random_masks() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for trial in 0..20 {
            let dims = [3 + (next() % 8) as usize, 3 + (next() % 8) as usize, 3 + (next() % 8) as usize];
            let spacing = [
                0.2 + (next() % 100) as f64 / 100.0,
                0.2 + (next() % 100) as f64 / 100.0,
                0.2 + (next() % 100) as f64 / 100.0,
            ];
            let grid = VoxelGrid::from_spacing(dims, spacing).unwrap();
            let data: Vec<bool> = (0..grid.len()).map(|_| next() % 3 != 0).collect();
            let m = Mask::new(grid, data).unwrap();
            let fast = distance_transform(&m);
            let brute = brute_edt(&m);
            for (i, (&a, &b)) in fast.data.iter().zip(brute.iter()).enumerate() {
                assert!(
                    a == b || (a.is_infinite() && b.is_infinite()),
                    "trial {trial} voxel {i}: fast {a} brute {b}"
                );
            }
        }
    }
}
