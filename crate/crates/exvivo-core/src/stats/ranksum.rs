//! Mann-Whitney U rank-sum test for two independent groups.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::stats::ranks::midranks;
use crate::stats::tdist::normal_cdf;

#[derive(Debug, Clone, PartialEq)]
pub struct RankSumResult {
    /// U statistic of the first group.
    pub u: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// True when p came from full enumeration rather than the normal
    /// approximation.
    pub exact: bool,
}

/// Two-sided Mann-Whitney U with mid-rank tie handling. Exact enumeration
/// when n_a + n_b <= 12 and there are no ties, otherwise the normal
/// approximation with tie-corrected variance and continuity correction.
pub fn rank_sum_test(group_a: &[f64], group_b: &[f64]) -> Result<RankSumResult> {
    let na = group_a.len();
    let nb = group_b.len();
    if na < 2 || nb < 2 {
        return Err(CoreError::InsufficientData("each group needs at least 2 observations".into()));
    }
    let mut pooled = Vec::with_capacity(na + nb);
    pooled.extend_from_slice(group_a);
    pooled.extend_from_slice(group_b);
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::InsufficientData("non-finite observation".into()));
    }
    let ranks = midranks(&pooled);
    let r_a: f64 = ranks[..na].iter().sum();
    let u = r_a - (na * (na + 1)) as f64 / 2.0;

    let n = na + nb;
    let has_ties = {
        let mut sorted = pooled.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.windows(2).any(|w| w[0] == w[1])
    };

    if n <= 12 && !has_ties {
        let p = exact_two_sided(na, nb, u);
        return Ok(RankSumResult { u, p, exact: true });
    }

    // normal approximation with tie correction and continuity correction
    let mu = (na * nb) as f64 / 2.0;
    let tie_term: f64 = {
        let mut sorted = pooled;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut sum = 0.0;
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            sum += t * t * t - t;
            i = j + 1;
        }
        sum
    };
    let var = (na * nb) as f64 / 12.0 * ((n + 1) as f64 - tie_term / (n as f64 * (n as f64 - 1.0)));
    if var <= 0.0 {
        return Ok(RankSumResult { u, p: 1.0, exact: false });
    }
    let z = (libm::fabs(u - mu) - 0.5).max(0.0) / libm::sqrt(var);
    let p = (2.0 * normal_cdf(-z)).min(1.0);
    Ok(RankSumResult { u, p, exact: false })
}

/// Exact two-sided p over the full distribution of U: subsets of size na
/// from ranks 1..=n, counted by a subset-sum table.
fn exact_two_sided(na: usize, nb: usize, u_obs: f64) -> f64 {
    let n = na + nb;
    let max_sum = (n * (n + 1)) / 2;
    // ways[j][s]: subsets of size j with rank sum s
    let mut ways = vec![vec![0u64; max_sum + 1]; na + 1];
    ways[0][0] = 1;
    for r in 1..=n {
        for j in (1..=na.min(r)).rev() {
            for s in (r..=max_sum).rev() {
                ways[j][s] += ways[j - 1][s - r];
            }
        }
    }
    let offset = (na * (na + 1)) / 2;
    let mut le = 0u64;
    let mut ge = 0u64;
    let mut total = 0u64;
    for (s, &w) in ways[na].iter().enumerate() {
        if w == 0 || s < offset {
            continue;
        }
        let u = (s - offset) as f64;
        total += w;
        if u <= u_obs + 1e-9 {
            le += w;
        }
        if u >= u_obs - 1e-9 {
            ge += w;
        }
    }
    let tail = le.min(ge) as f64 / total as f64;
    (2.0 * tail).min(1.0)
}
