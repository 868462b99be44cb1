//! Benjamini-Hochberg step-up false discovery rate control.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

/// Reject/accept flags in input order: sort p ascending, find the largest
/// rank i with p(i) <= (i/m) * q, reject everything up to that rank.
pub fn bh_fdr(p_values: &[f64], q: f64) -> Result<Vec<bool>> {
    if p_values.is_empty() {
        return Err(CoreError::InsufficientData("empty p-value list".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(CoreError::InsufficientData(alloc::format!("q must be in (0,1), got {q}")));
    }
    if p_values.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(CoreError::InsufficientData("p-values must lie in [0,1]".into()));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).unwrap());
    let mut cutoff_rank = 0usize; // 1-based; 0 = reject nothing
    for (rank0, &idx) in order.iter().enumerate() {
        let i = rank0 + 1;
        if p_values[idx] <= (i as f64 / m as f64) * q {
            cutoff_rank = i;
        }
    }
    let mut rejected = vec![false; m];
    for &idx in &order[..cutoff_rank] {
        rejected[idx] = true;
    }
    Ok(rejected)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_rejected_when_under_line() {
        // p(i) <= i * 0.01 for every i at q = 0.05, m = 5
        let p = [0.01, 0.02, 0.03, 0.04, 0.05];
        assert_eq!(bh_fdr(&p, 0.05).unwrap(), vec![true; 5]);
    }

    #[test]
    fn none_rejected_at_p_one() {
        assert_eq!(bh_fdr(&[1.0, 1.0, 1.0], 0.05).unwrap(), vec![false; 3]);
    }

    #[test]
    fn single_test() {
        assert_eq!(bh_fdr(&[0.01], 0.05).unwrap(), vec![true]);
        assert_eq!(bh_fdr(&[0.06], 0.05).unwrap(), vec![false]);
    }

    #[test]
    fn step_up_rescues_later_ranks() {
        // p = [0.04, 0.049]: rank 1 line is 0.025 (fails) but rank 2 line is
        // 0.05, so both are rejected by the step-up rule
        assert_eq!(bh_fdr(&[0.04, 0.049], 0.05).unwrap(), vec![true, true]);
    }

    #[test]
    fn output_order_matches_input() {
        let p = [0.9, 0.001, 0.8, 0.002];
        assert_eq!(bh_fdr(&p, 0.05).unwrap(), vec![false, true, false, true]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(bh_fdr(&[], 0.05).is_err());
        assert!(bh_fdr(&[0.5], 0.0).is_err());
        assert!(bh_fdr(&[0.5], 1.0).is_err());
        assert!(bh_fdr(&[1.5], 0.05).is_err());
    }
}
