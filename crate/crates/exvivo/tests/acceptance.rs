//! Acceptance gate: one test per release criterion. Every test prints a
//! single `PASS: criterion N — ...` line on success (visible with
//! `cargo test --test acceptance -- --nocapture`).
//!
//! The numeric criteria are checked against oracles implemented here from
//! first principles (brute-force scans, hand formulas, quadrature, full
//! enumeration), never by calling back into the code under test.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use exvivo_core::edt::distance_transform;
use exvivo_core::metrics::{dice, hd95};
use exvivo_core::phantom::{generate, PhantomKind, PhantomSpec, LABEL_GM};
use exvivo_core::stats::{
    bh_fdr, bland_altman, icc_average_fixed_raters, rank_sum_test, spearman, student_t_cdf,
    Alternative,
};
use exvivo_core::thickness::{inscribed_sphere_thickness_with, ThicknessParams};
use exvivo_core::{Mask, VoxelGrid};

// ---------------------------------------------------------------------------
// deterministic test RNG

fn xorshift(state: &mut u64) -> u64 {
    *state ^= *state << 13;
    *state ^= *state >> 7;
    *state ^= *state << 17;
    *state
}

fn rand_unit(state: &mut u64) -> f64 {
    (xorshift(state) >> 11) as f64 / (1u64 << 53) as f64
}

fn random_mask(state: &mut u64, max_dim: usize, density: f64) -> Mask {
    let dim = |s: &mut u64| 3 + (xorshift(s) as usize) % (max_dim - 2);
    let dims = [dim(state), dim(state), dim(state)];
    let spacing = [
        0.3 + 1.7 * rand_unit(state),
        0.3 + 1.7 * rand_unit(state),
        0.3 + 1.7 * rand_unit(state),
    ];
    let grid = VoxelGrid::from_spacing(dims, spacing).unwrap();
    let data: Vec<bool> = (0..grid.len()).map(|_| rand_unit(state) < density).collect();
    Mask::new(grid, data).unwrap()
}

// ---------------------------------------------------------------------------
// brute-force geometry oracles

/// O(n^2) scan: for every voxel, the minimum anisotropic center-to-center
/// distance to any background voxel. Same term grouping as a separable
/// squared-distance pass so that agreement can be exact.
fn brute_edt(mask: &Mask) -> Vec<f64> {
    brute_nearest(&mask.grid, &mask.data.iter().map(|&b| !b).collect::<Vec<_>>())
}

fn brute_nearest(grid: &VoxelGrid, seeds: &[bool]) -> Vec<f64> {
    let [nx, ny, nz] = grid.dims();
    let s = grid.spacing();
    let (wx, wy, wz) = (s[0] * s[0], s[1] * s[1], s[2] * s[2]);
    let mut out = vec![f64::INFINITY; grid.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let idx = grid.linear(x, y, z);
                if seeds[idx] {
                    out[idx] = 0.0;
                    continue;
                }
                let mut best = f64::INFINITY;
                for qz in 0..nz {
                    for qy in 0..ny {
                        for qx in 0..nx {
                            if !seeds[grid.linear(qx, qy, qz)] {
                                continue;
                            }
                            let dx = x as f64 - qx as f64;
                            let dy = y as f64 - qy as f64;
                            let dz = z as f64 - qz as f64;
                            let d2 = dx * dx * wx + dy * dy * wy + dz * dz * wz;
                            if d2 < best {
                                best = d2;
                            }
                        }
                    }
                }
                out[idx] = best.sqrt();
            }
        }
    }
    out
}

/// Foreground voxels with a face-adjacent background neighbor or on the
/// volume edge (the documented boundary definition).
fn brute_boundary(mask: &Mask) -> Vec<bool> {
    let grid = &mask.grid;
    let [nx, ny, nz] = grid.dims();
    let mut out = vec![false; grid.len()];
    for idx in 0..grid.len() {
        if !mask.data[idx] {
            continue;
        }
        let [x, y, z] = grid.coords(idx);
        let mut exposed = x == 0 || y == 0 || z == 0 || x == nx - 1 || y == ny - 1 || z == nz - 1;
        if !exposed {
            for (dx, dy, dz) in [(1i64, 0i64, 0i64), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)] {
                let n = grid.linear(
                    (x as i64 + dx) as usize,
                    (y as i64 + dy) as usize,
                    (z as i64 + dz) as usize,
                );
                if !mask.data[n] {
                    exposed = true;
                    break;
                }
            }
        }
        out[idx] = exposed;
    }
    out
}

fn percentile95(sorted: &[f64]) -> f64 {
    let h = 0.95 * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

fn brute_hd95(a: &Mask, b: &Mask) -> Option<f64> {
    if !a.any() || !b.any() {
        return None;
    }
    let ba = brute_boundary(a);
    let bb = brute_boundary(b);
    let directed = |from: &[bool], to: &[bool]| -> f64 {
        let field = brute_nearest(&a.grid, to);
        let mut dists: Vec<f64> = from
            .iter()
            .zip(field.iter())
            .filter_map(|(&f, &d)| f.then_some(d))
            .collect();
        dists.sort_by(|x, y| x.partial_cmp(y).unwrap());
        percentile95(&dists)
    };
    Some(directed(&ba, &bb).max(directed(&bb, &ba)))
}

fn brute_dice(a: &Mask, b: &Mask) -> f64 {
    let inter = a.data.iter().zip(&b.data).filter(|(&x, &y)| x && y).count();
    let total = a.count() + b.count();
    if total == 0 {
        1.0
    } else {
        2.0 * inter as f64 / total as f64
    }
}

// ---------------------------------------------------------------------------
// hand-formula statistics oracles

/// Mid-rank by counting: rank(v) = #(less than v) + (#(equal to v) + 1) / 2.
fn hand_midranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let less = values.iter().filter(|&&w| w < v).count();
            let eq = values.iter().filter(|&&w| w == v).count();
            less as f64 + (eq as f64 + 1.0) / 2.0
        })
        .collect()
}

/// Pearson r from the raw-sum computational formula (a different arithmetic
/// path than a centered-moments implementation).
fn hand_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let syy: f64 = y.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt()
}

/// Student-t CDF by quadrature, independent of any incomplete-beta code:
/// with u = sqrt(df) * tan(theta) the density integral becomes
/// integral of cos(theta)^(df-1), which composite Simpson handles to
/// ~1e-14 on the bounded interval.
fn quadrature_t_cdf(t: f64, df: f64) -> f64 {
    let upper = (t / df.sqrt()).atan();
    let simpson = |a: f64, b: f64| -> f64 {
        let n = 20_000usize; // even
        let h = (b - a) / n as f64;
        let f = |theta: f64| theta.cos().powf(df - 1.0);
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    };
    let half_pi = std::f64::consts::FRAC_PI_2;
    simpson(-half_pi, upper) / simpson(-half_pi, half_pi)
}

/// ICC(3,k) via the sum-of-squares decomposition
/// SS_error = SS_total - SS_rows - SS_cols (versus the residual double loop
/// in the implementation).
fn hand_icc(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let k = rows[0].len();
    let grand: f64 = rows.iter().flatten().sum::<f64>() / (n * k) as f64;
    let ss_total: f64 = rows.iter().flatten().map(|v| (v - grand) * (v - grand)).sum();
    let ss_rows: f64 = rows
        .iter()
        .map(|r| {
            let m = r.iter().sum::<f64>() / k as f64;
            k as f64 * (m - grand) * (m - grand)
        })
        .sum();
    let ss_cols: f64 = (0..k)
        .map(|j| {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            n as f64 * (m - grand) * (m - grand)
        })
        .sum();
    let ms_rows = ss_rows / (n - 1) as f64;
    let ms_err = (ss_total - ss_rows - ss_cols) / ((n - 1) * (k - 1)) as f64;
    (ms_rows - ms_err) / ms_rows
}

/// BH by the threshold rule: reject every p <= p_(k) where k is the largest
/// rank with p_(k) <= (k/m) q. Equivalent to the step-up prefix rule.
fn hand_bh(p: &[f64], q: f64) -> Vec<bool> {
    let m = p.len();
    let mut sorted = p.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut threshold = -1.0;
    for (i, &pv) in sorted.iter().enumerate() {
        if pv <= (i + 1) as f64 / m as f64 * q {
            threshold = pv;
        }
    }
    p.iter().map(|&pv| pv <= threshold).collect()
}

/// Exact two-sided Mann-Whitney p by full enumeration of the C(n, na)
/// rank subsets (tie-free inputs only).
fn enumerated_rank_sum_p(a: &[f64], b: &[f64]) -> f64 {
    let na = a.len();
    let n = na + b.len();
    let mut pooled: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    pooled.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let rank_of = |v: f64| pooled.iter().position(|&w| w == v).unwrap() + 1;
    let u_obs = a.iter().map(|&v| rank_of(v)).sum::<usize>() - na * (na + 1) / 2;

    let mut le = 0u64;
    let mut ge = 0u64;
    let mut total = 0u64;
    let mut chosen = Vec::with_capacity(na);
    fn visit(
        next: usize,
        n: usize,
        na: usize,
        chosen: &mut Vec<usize>,
        u_obs: usize,
        le: &mut u64,
        ge: &mut u64,
        total: &mut u64,
    ) {
        if chosen.len() == na {
            let u = chosen.iter().sum::<usize>() - na * (na + 1) / 2;
            *total += 1;
            if u <= u_obs {
                *le += 1;
            }
            if u >= u_obs {
                *ge += 1;
            }
            return;
        }
        for r in next..=n {
            chosen.push(r);
            visit(r + 1, n, na, chosen, u_obs, le, ge, total);
            chosen.pop();
        }
    }
    visit(1, n, na, &mut chosen, u_obs, &mut le, &mut ge, &mut total);
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

// ---------------------------------------------------------------------------
// criteria

#[test]
fn criterion_1_edt_matches_brute_force_exactly() {
    let start = Instant::now();
    let mut state = 0x1ed7_0001u64;
    for case in 0..200 {
        let density = 0.25 + 0.5 * rand_unit(&mut state);
        let mask = random_mask(&mut state, 20, density);
        let fast = distance_transform(&mask);
        let brute = brute_edt(&mask);
        for (i, (&f, &b)) in fast.data.iter().zip(&brute).enumerate() {
            assert_eq!(
                f.to_bits(),
                b.to_bits(),
                "case {case}, voxel {i}: edt {f} != brute {b} on dims {:?}",
                mask.grid.dims()
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}, budget 30 s");
    println!("PASS: criterion 1 — EDT bit-exact vs O(n^2) oracle on 200 anisotropic masks ({elapsed:?})");
}

#[test]
fn criterion_2_phantom_thickness_within_one_voxel() {
    let start = Instant::now();
    let spacing = [0.3; 3];
    let params = ThicknessParams::default();
    let mut cases = Vec::new();
    for k in 3..=9 {
        cases.push(PhantomKind::Slab { thickness_vox: k });
    }
    for width in 2..=6 {
        cases.push(PhantomKind::SphericalShell { r_in_vox: 8, r_out_vox: 8 + width });
    }
    for kind in cases {
        let (map, truth) = generate(&PhantomSpec { kind, spacing, seed: 11 }).unwrap();
        let gm = map.mask_of(LABEL_GM);
        let field = distance_transform(&gm);
        let measured =
            inscribed_sphere_thickness_with(&gm, &field.data, truth.landmark_mm.unwrap(), &params)
                .unwrap();
        let analytic = truth.thickness_mm.unwrap();
        let err = (measured.thickness_mm - analytic).abs();
        assert!(
            err <= 0.3 + 1e-9,
            "{kind:?}: measured {} vs analytic {analytic}, error {err}",
            measured.thickness_mm
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}, budget 10 s");
    println!("PASS: criterion 2 — slab k=3..9 and shell width 2..6 thickness within 0.3 mm ({elapsed:?})");
}

#[test]
fn criterion_3_metrics_match_brute_force() {
    let mut state = 0x3e7_0003u64;
    for case in 0..100 {
        // shared grid for the pair
        let density_a = 0.2 + 0.6 * rand_unit(&mut state);
        let a = random_mask(&mut state, 16, density_a);
        let density_b = 0.2 + 0.6 * rand_unit(&mut state);
        let b_data: Vec<bool> = (0..a.grid.len()).map(|_| rand_unit(&mut state) < density_b).collect();
        let b = Mask::new(a.grid.clone(), b_data).unwrap();

        let d_ab = dice(&a, &b).unwrap();
        assert_eq!(d_ab.to_bits(), brute_dice(&a, &b).to_bits(), "case {case}: dice vs brute");
        assert_eq!(d_ab.to_bits(), dice(&b, &a).unwrap().to_bits(), "case {case}: dice symmetry");
        assert!((0.0..=1.0).contains(&d_ab), "case {case}: dice out of [0,1]");

        let fast = hd95(&a, &b).unwrap();
        let brute = brute_hd95(&a, &b);
        match (fast, brute) {
            (None, None) => {}
            (Some(f), Some(o)) => {
                assert_eq!(f.to_bits(), o.to_bits(), "case {case}: hd95 {f} vs brute {o}")
            }
            other => panic!("case {case}: hd95 definedness mismatch {other:?}"),
        }
    }
    println!("PASS: criterion 3 — dice and hd95 bit-exact vs brute-force oracles on 100 mask pairs");
}

#[test]
fn criterion_4_pinned_reference_p_values() {
    // One-sided p for rho = -0.66 at n = 22 (t approximation, n-2 df).
    let rho: f64 = -0.66;
    let df = 20.0;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let p = student_t_cdf(t, df);
    assert!(
        (0.0002..=0.0006).contains(&p),
        "rho=-0.66, n=22: p = {p}, expected in [0.0002, 0.0006]"
    );
    assert!((p - quadrature_t_cdf(t, df)).abs() < 1e-10, "t CDF disagrees with quadrature");

    // One-sided p for partial r = -0.44 at 34 residual df.
    let r: f64 = -0.44;
    let df = 34.0;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let p = student_t_cdf(t, df);
    assert!(
        (0.002..=0.005).contains(&p),
        "r=-0.44, df=34: p = {p}, expected in [0.002, 0.005]"
    );
    assert!((p - quadrature_t_cdf(t, df)).abs() < 1e-10, "t CDF disagrees with quadrature");

    println!("PASS: criterion 4 — pinned p-values in range (rho=-0.66/n=22 and r=-0.44/df=34)");
}

#[test]
fn criterion_5_statistics_match_hand_formulas() {
    let mut state = 0x57a7_0005u64;

    // Spearman with ties: rho against counting-rank Pearson, p against the
    // quadrature t CDF.
    let mut done = 0;
    while done < 50 {
        let n = 5 + (xorshift(&mut state) as usize) % 14;
        let draw = |s: &mut u64| (xorshift(s) % 7) as f64; // small pool -> ties
        let x: Vec<f64> = (0..n).map(|_| draw(&mut state)).collect();
        let y: Vec<f64> = (0..n).map(|_| draw(&mut state)).collect();
        let result = match spearman(&x, &y, Alternative::Less) {
            Ok(r) => r,
            Err(_) => continue, // constant after rank transform; redraw
        };
        let rho_hand = hand_pearson(&hand_midranks(&x), &hand_midranks(&y)).clamp(-1.0, 1.0);
        assert!(
            (result.rho - rho_hand).abs() < 1e-10,
            "spearman rho {} vs hand {rho_hand}",
            result.rho
        );
        if 1.0 - rho_hand * rho_hand > 1e-12 {
            let df = (n - 2) as f64;
            let p_hand = quadrature_t_cdf(rho_hand * (df / (1.0 - rho_hand * rho_hand)).sqrt(), df);
            assert!(
                (result.p - p_hand).abs() < 1e-10,
                "spearman p {} vs hand {p_hand}",
                result.p
            );
        }
        done += 1;
    }

    // ICC against the SS_total decomposition.
    for _ in 0..50 {
        let n = 3 + (xorshift(&mut state) as usize) % 6;
        let k = 2 + (xorshift(&mut state) as usize) % 3;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..k).map(|_| 10.0 * rand_unit(&mut state)).collect()).collect();
        let icc = icc_average_fixed_raters(&rows).unwrap().icc;
        let hand = hand_icc(&rows);
        assert!((icc - hand).abs() < 1e-10, "icc {icc} vs hand {hand}");
    }

    // Bland-Altman against the direct definition.
    for _ in 0..50 {
        let n = 4 + (xorshift(&mut state) as usize) % 20;
        let a: Vec<f64> = (0..n).map(|_| 5.0 * rand_unit(&mut state)).collect();
        let b: Vec<f64> = (0..n).map(|_| 5.0 * rand_unit(&mut state)).collect();
        let r = bland_altman(&a, &b).unwrap();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let sd = (d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((r.mean_difference - mean).abs() < 1e-10);
        assert!((r.sd_difference - sd).abs() < 1e-10);
        assert!((r.loa_low - (mean - 1.96 * sd)).abs() < 1e-10);
        assert!((r.loa_high - (mean + 1.96 * sd)).abs() < 1e-10);
    }

    // BH against the threshold rule.
    for _ in 0..50 {
        let m = 1 + (xorshift(&mut state) as usize) % 20;
        let p: Vec<f64> = (0..m).map(|_| rand_unit(&mut state)).collect();
        let q = 0.01 + 0.5 * rand_unit(&mut state);
        assert_eq!(bh_fdr(&p, q).unwrap(), hand_bh(&p, q), "bh mismatch at q={q}");
    }

    // Exact Mann-Whitney against full enumeration, every size with n <= 10.
    for na in 2..=8usize {
        for nb in 2..=(10 - na) {
            for _ in 0..3 {
                // distinct values: a random shuffle of 1..=n
                let n = na + nb;
                let mut vals: Vec<f64> = (1..=n).map(|v| v as f64).collect();
                for i in (1..n).rev() {
                    vals.swap(i, (xorshift(&mut state) as usize) % (i + 1));
                }
                let (a, b) = vals.split_at(na);
                let r = rank_sum_test(a, b).unwrap();
                assert!(r.exact, "n={n} should use the exact path");
                let p = enumerated_rank_sum_p(a, b);
                assert!((r.p - p).abs() < 1e-12, "rank sum p {} vs enumeration {p}", r.p);
            }
        }
    }

    println!("PASS: criterion 5 — spearman/ICC/Bland-Altman/BH within 1e-10 of hand oracles; exact U = enumeration");
}

#[test]
fn criterion_6_invariance_suite() {
    let mut state = 0x17a7_0006u64;

    // Spearman is rank-based: a strictly increasing affine map that is exact
    // in floating point (0.5*y + 16 on small integers) must not move a bit.
    let mut done = 0;
    while done < 40 {
        let n = 6 + (xorshift(&mut state) as usize) % 12;
        let x: Vec<f64> = (0..n).map(|_| (xorshift(&mut state) % 9) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| (xorshift(&mut state) % 9) as f64).collect();
        let base = match spearman(&x, &y, Alternative::Less) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let y2: Vec<f64> = y.iter().map(|v| 0.5 * v + 16.0).collect();
        let mapped = spearman(&x, &y2, Alternative::Less).unwrap();
        assert_eq!(base.rho.to_bits(), mapped.rho.to_bits(), "rho moved under monotone map");
        assert_eq!(base.p.to_bits(), mapped.p.to_bits(), "p moved under monotone map");
        done += 1;
    }

    // Consistency ICC ignores a constant shift per rater.
    for _ in 0..30 {
        let n = 4 + (xorshift(&mut state) as usize) % 5;
        let k = 2 + (xorshift(&mut state) as usize) % 3;
        let rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..k).map(|_| 10.0 * rand_unit(&mut state)).collect()).collect();
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(j, v)| v + 3.5 * j as f64 - 1.25).collect())
            .collect();
        let a = icc_average_fixed_raters(&rows).unwrap().icc;
        let b = icc_average_fixed_raters(&shifted).unwrap().icc;
        assert!((a - b).abs() <= 1e-12, "icc {a} vs shifted {b}");
    }

    // Doubling the spacing doubles hd95 bit-for-bit (powers of two are
    // exact in floating point).
    let mut done = 0;
    while done < 30 {
        let dims = [8, 8, 8];
        let g1 = VoxelGrid::from_spacing(dims, [0.7, 0.9, 1.2]).unwrap();
        let g2 = VoxelGrid::from_spacing(dims, [1.4, 1.8, 2.4]).unwrap();
        let da: Vec<bool> = (0..g1.len()).map(|_| rand_unit(&mut state) < 0.4).collect();
        let db: Vec<bool> = (0..g1.len()).map(|_| rand_unit(&mut state) < 0.4).collect();
        if !da.iter().any(|&v| v) || !db.iter().any(|&v| v) {
            continue;
        }
        let h1 = hd95(&Mask::new(g1.clone(), da.clone()).unwrap(), &Mask::new(g1, db.clone()).unwrap())
            .unwrap()
            .unwrap();
        let h2 = hd95(&Mask::new(g2.clone(), da).unwrap(), &Mask::new(g2, db).unwrap())
            .unwrap()
            .unwrap();
        assert_eq!((2.0 * h1).to_bits(), h2.to_bits(), "hd95 {h1} did not scale to {h2}");
        done += 1;
    }

    // BH rejections never shrink as q grows.
    for _ in 0..30 {
        let m = 3 + (xorshift(&mut state) as usize) % 20;
        let p: Vec<f64> = (0..m).map(|_| rand_unit(&mut state)).collect();
        let q1 = 0.01 + 0.3 * rand_unit(&mut state);
        let q2 = q1 + 0.3 * rand_unit(&mut state) + 1e-6;
        let r1 = bh_fdr(&p, q1).unwrap();
        let r2 = bh_fdr(&p, q2.min(0.999)).unwrap();
        for (a, b) in r1.iter().zip(&r2) {
            assert!(!a | b, "rejection lost when q grew from {q1} to {q2}");
        }
    }

    println!("PASS: criterion 6 — monotone-transform, rater-offset, spacing-doubling, and BH-monotonicity invariances hold");
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("exvivo-acc-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn criterion_7_pipeline_is_deterministic_and_recovers_the_effect() {
    let start = Instant::now();
    let dir = tempdir("pipeline");
    let mut state = 0x91be_0007u64;

    // 20 subjects: ordinal ptau ratings cycling through the scale, slab
    // thickness decreasing with the rating plus one voxel of seeded noise.
    let levels = [0.0, 0.5, 1.0, 2.0, 3.0];
    let base_vox = [10usize, 9, 8, 6, 4];
    let mut subjects_toml = String::new();
    let mut ratings = String::from("subject,region,ptau,abeta,tdp43,asyn,neuronloss\n");
    for i in 0..20 {
        let id = format!("s{:02}", i + 1);
        let level = i % 5;
        let k = base_vox[level] + (xorshift(&mut state) % 2) as usize;
        let spec = PhantomSpec { kind: PhantomKind::Slab { thickness_vox: k }, spacing: [0.3; 3], seed: 1 };
        let (map, truth) = generate(&spec).unwrap();
        let seg = dir.join(format!("{id}.nii.gz"));
        exvivo::nifti::write_label_map(&map, &seg).unwrap();
        let lm = truth.landmark_mm.unwrap();
        std::fs::write(
            dir.join(format!("{id}_lm.csv")),
            format!("name,x_mm,y_mm,z_mm\nmidfrontal,{},{},{}\n", lm[0], lm[1], lm[2]),
        )
        .unwrap();
        subjects_toml.push_str(&format!(
            "[[subjects]]\nid = \"{id}\"\nlabel_map = \"{id}.nii.gz\"\nlandmarks = \"{id}_lm.csv\"\n\n"
        ));
        ratings.push_str(&format!("{id},middle_frontal_gyrus,{},,,,\n", levels[level]));
    }
    std::fs::write(dir.join("ratings.csv"), ratings).unwrap();
    std::fs::write(
        dir.join("measure.toml"),
        format!("[study]\nlandmarks = [\"midfrontal\"]\n\n[labels]\ngm = 1\n\n{subjects_toml}"),
    )
    .unwrap();

    let exe = env!("CARGO_BIN_EXE_exvivo");
    let run = |args: &[&str]| {
        let out = std::process::Command::new(exe).args(args).output().expect("binary runs");
        assert_eq!(
            out.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };

    let work = dir.join("work");
    run(&[
        "thickness",
        "--config",
        dir.join("measure.toml").to_str().unwrap(),
        "--jobs",
        "4",
        "--out",
        work.to_str().unwrap(),
    ]);

    std::fs::write(
        dir.join("study.toml"),
        "[study]\nq = 0.05\nalternative = \"less\"\n\n\
         [inputs]\nthickness = \"work/thickness.csv\"\nratings = \"ratings.csv\"\n",
    )
    .unwrap();
    let (c1, c2) = (dir.join("run1"), dir.join("run2"));
    for out in [&c1, &c2] {
        run(&[
            "correlate",
            "--config",
            dir.join("study.toml").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
    }

    let bytes1 = std::fs::read(c1.join("correlation_matrix.csv")).unwrap();
    let bytes2 = std::fs::read(c2.join("correlation_matrix.csv")).unwrap();
    assert_eq!(bytes1, bytes2, "correlation_matrix.csv differs between runs");

    let text = String::from_utf8(bytes1).unwrap();
    let row = text
        .lines()
        .find(|l| l.starts_with("midfrontal,ptau,"))
        .expect("midfrontal/ptau cell present");
    let fields: Vec<&str> = row.split(',').collect();
    let rho: f64 = fields[2].parse().unwrap();
    assert!(rho < -0.5, "recovered rho {rho}, expected < -0.5: {row}");
    assert_eq!(fields[5], "true", "BH rejection expected at q=0.05: {row}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "took {elapsed:?}, budget 60 s");
    println!("PASS: criterion 7 — byte-identical correlate runs, rho = {rho} with BH rejection ({elapsed:?})");
}

#[test]
fn criterion_8_nifti_round_trip() {
    use exvivo::nifti::{self, Datatype};
    use exvivo_core::ImageVolume;

    let dir = tempdir("nifti");
    let grid = VoxelGrid::from_spacing_offset([9, 7, 5], [0.31, 0.52, 1.07], [-4.25, 3.5, -0.75]).unwrap();
    let labels: Vec<u32> = (0..grid.len()).map(|i| (i % 5) as u32).collect();
    let dict: BTreeMap<u32, String> = (1..=4).map(|i| (i, format!("label_{i}"))).collect();
    let map = exvivo_core::LabelMap::new(grid.clone(), labels.clone(), dict).unwrap();

    for dt in [Datatype::U8, Datatype::I16, Datatype::I32] {
        for ext in ["nii", "nii.gz"] {
            let path = dir.join(format!("labels-{dt:?}.{ext}"));
            nifti::write_label_map_as(&map, &path, dt).unwrap();
            let back = nifti::read_label_map(&path, None).unwrap();
            assert_eq!(back.labels, labels, "{dt:?}/{ext}: label data changed");
            assert_round_trip(&grid, &back.grid);
        }
    }

    // float image payload is bit-exact too
    let data: Vec<f32> = (0..grid.len()).map(|i| (i as f32).sin() * 7.25).collect();
    let img = ImageVolume::new(grid.clone(), data.clone()).unwrap();
    for ext in ["nii", "nii.gz"] {
        let path = dir.join(format!("image.{ext}"));
        nifti::write_image(&img, &path).unwrap();
        let back = nifti::read_image(&path).unwrap();
        let same = back.data.iter().zip(&data).all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same, "{ext}: image samples changed");
        assert_round_trip(&grid, &back.grid);
    }

    println!("PASS: criterion 8 — NIfTI label/image round-trips bit-exact, affines within 1e-6");
}

/// The header stores geometry as float-32, so the reread grid may differ
/// from the original at that precision; voxel<->physical must still invert
/// to 1e-6 and agree with the original grid to the same tolerance.
fn assert_round_trip(original: &VoxelGrid, reread: &VoxelGrid) {
    assert_eq!(original.dims(), reread.dims());
    for v in [[0.0, 0.0, 0.0], [8.0, 6.0, 4.0], [3.0, 1.0, 2.0]] {
        let p = reread.voxel_to_physical(v);
        let back = reread.physical_to_voxel(p);
        for a in 0..3 {
            assert!((back[a] - v[a]).abs() < 1e-6, "voxel round-trip drift {back:?} vs {v:?}");
            let p0 = original.voxel_to_physical(v);
            assert!((p[a] - p0[a]).abs() < 1e-4, "physical drift {p:?} vs {p0:?}");
        }
    }
}
