//! Invariance and equivariance properties that must hold structurally,
//! independent of any particular numeric oracle.

use proptest::prelude::*;

use exvivo_core::grid::VoxelGrid;
use exvivo_core::measure::region_volume;
use exvivo_core::metrics::{dice, hd95};
use exvivo_core::stats::{
    bh_fdr, icc_average_fixed_raters, partial_spearman, spearman, Alternative,
};
use exvivo_core::volume::{LabelMap, Mask};

fn mask_pair(dims: [usize; 3], spacing: [f64; 3], bits_a: &[bool], bits_b: &[bool]) -> (Mask, Mask) {
    let grid = VoxelGrid::from_spacing(dims, spacing).unwrap();
    (
        Mask::new(grid.clone(), bits_a.to_vec()).unwrap(),
        Mask::new(grid, bits_b.to_vec()).unwrap(),
    )
}

/// Strictly increasing, tie-preserving, and exact on small integers:
/// x/2 and +16 are both representable without rounding for |x| <= 2^20.
fn monotone(v: f64) -> f64 {
    v * 0.5 + 16.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spearman_invariant_under_monotone_transform(
        xs in prop::collection::vec(-1000i32..1000, 4..20),
        ys in prop::collection::vec(-1000i32..1000, 4..20),
    ) {
        let n = xs.len().min(ys.len());
        let x: Vec<f64> = xs[..n].iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = ys[..n].iter().map(|&v| v as f64).collect();
        let tx: Vec<f64> = x.iter().map(|&v| monotone(v)).collect();
        let (base, trans) = (
            spearman(&x, &y, Alternative::TwoSided),
            spearman(&tx, &y, Alternative::TwoSided),
        );
        match (base, trans) {
            (Ok(a), Ok(b)) => {
                // ranks are identical, so rho and p must be bitwise equal
                prop_assert_eq!(a.rho.to_bits(), b.rho.to_bits());
                prop_assert_eq!(a.p.to_bits(), b.p.to_bits());
            }
            (Err(_), Err(_)) => {} // constant input stays constant under the transform
            (a, b) => prop_assert!(false, "divergent outcomes {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn icc_invariant_under_rater_offset(
        cells in prop::collection::vec(-100i32..100, 4..24),
        offset in -50i32..50,
        k in 2usize..4,
    ) {
        let n = cells.len() / k;
        prop_assume!(n >= 2);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..k).map(|j| cells[i * k + j] as f64).collect())
            .collect();
        let shifted: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r[0] += offset as f64; // constant shift of one rater column
                r
            })
            .collect();
        match (icc_average_fixed_raters(&rows), icc_average_fixed_raters(&shifted)) {
            (Ok(a), Ok(b)) => prop_assert!(
                (a.icc - b.icc).abs() < 1e-12,
                "icc changed under rater offset: {} vs {}", a.icc, b.icc
            ),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "divergent outcomes {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn hd95_doubles_exactly_when_spacing_doubles(
        bits in prop::collection::vec(any::<bool>(), 512),
        flips in prop::collection::vec(0usize..512, 1..30),
    ) {
        let mut other = bits.clone();
        for &f in &flips {
            other[f] = !other[f];
        }
        let spacing = [0.7, 0.9, 1.2];
        let doubled = [1.4, 1.8, 2.4];
        let (a1, b1) = mask_pair([8, 8, 8], spacing, &bits, &other);
        let (a2, b2) = mask_pair([8, 8, 8], doubled, &bits, &other);
        let h1 = hd95(&a1, &b1).unwrap();
        let h2 = hd95(&a2, &b2).unwrap();
        match (h1, h2) {
            (Some(h1), Some(h2)) => {
                // x2 is a power-of-two scale, so equivariance is bitwise
                prop_assert_eq!((2.0 * h1).to_bits(), h2.to_bits());
            }
            (None, None) => {}
            (a, b) => prop_assert!(false, "divergent emptiness {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn dice_is_symmetric_and_bounded(
        bits_a in prop::collection::vec(any::<bool>(), 216),
        bits_b in prop::collection::vec(any::<bool>(), 216),
    ) {
        let (a, b) = mask_pair([6, 6, 6], [0.5, 0.5, 0.8], &bits_a, &bits_b);
        let d_ab = dice(&a, &b).unwrap();
        let d_ba = dice(&b, &a).unwrap();
        prop_assert_eq!(d_ab.to_bits(), d_ba.to_bits());
        prop_assert!((0.0..=1.0).contains(&d_ab));
        prop_assert_eq!(dice(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn bh_rejections_grow_with_q(
        raw in prop::collection::vec(0u32..=1_000_000, 1..40),
        q_lo in 1u32..400_000,
        q_hi_extra in 1u32..400_000,
    ) {
        let p: Vec<f64> = raw.iter().map(|&v| v as f64 / 1_000_000.0).collect();
        let q1 = q_lo as f64 / 1_000_000.0;
        let q2 = (q_lo + q_hi_extra) as f64 / 1_000_000.0;
        let r1 = bh_fdr(&p, q1).unwrap();
        let r2 = bh_fdr(&p, q2).unwrap();
        for (i, (&a, &b)) in r1.iter().zip(r2.iter()).enumerate() {
            prop_assert!(!a || b, "p[{i}]={} rejected at q={q1} but not at q={q2}", p[i]);
        }
    }

    #[test]
    fn label_voxel_counts_are_additive(
        raw in prop::collection::vec(0u32..4, 343),
    ) {
        let grid = VoxelGrid::from_spacing([7, 7, 7], [0.4, 0.4, 0.4]).unwrap();
        let mut dict = std::collections::BTreeMap::new();
        for l in 1..4u32 {
            dict.insert(l, format!("region_{l}"));
        }
        let map = LabelMap::new(grid, raw.clone(), dict).unwrap();
        let total_fg = raw.iter().filter(|&&l| l != 0).count();
        let mut sum = 0usize;
        for l in 1..4u32 {
            sum += region_volume(&map, l, None).unwrap().voxel_count;
        }
        prop_assert_eq!(sum, total_fg);
    }
}

/// Partialling out the confounder that drives both series shrinks the
/// association toward zero in a constructed example.
#[test]
fn partial_spearman_reduces_confounded_association() {
    // z drives both x and y; the residual association is weak noise
    let z: Vec<f64> = (0..24).map(|i| i as f64).collect();
    let x: Vec<f64> = z.iter().enumerate().map(|(i, &v)| 2.0 * v + ((i * 7) % 5) as f64 * 1.1).collect();
    let y: Vec<f64> = z.iter().enumerate().map(|(i, &v)| -1.5 * v + ((i * 11) % 7) as f64 * 0.8).collect();
    let plain = spearman(&x, &y, Alternative::TwoSided).unwrap();
    let partial = partial_spearman(&x, &y, &z, "z", Alternative::TwoSided).unwrap();
    assert!(plain.rho < -0.9, "confounded rho {}", plain.rho);
    assert!(
        partial.rho.abs() < plain.rho.abs() - 0.3,
        "partialling should shrink |rho|: plain {} partial {}",
        plain.rho,
        partial.rho
    );
    assert_eq!(partial.partialed_on.as_deref(), Some("z"));
}
