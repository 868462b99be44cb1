//! Spearman and partial Spearman rank correlation with one-sided p-values.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};
use crate::stats::ranks::{midranks, pearson};
use crate::stats::tdist::student_t_cdf;
use crate::stats::Alternative;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub rho: f64,
    pub p: f64,
    pub n: usize,
    pub alternative: Alternative,
    pub partialed_on: Option<String>,
    pub bh_rejected: Option<bool>,
    /// Set when the computation had to deviate from the request (e.g. a
    /// constant covariate degraded a partial correlation to a plain one).
    pub warning: Option<String>,
}

fn complete_pairs(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&a, &b) in x.iter().zip(y.iter()) {
        if a.is_finite() && b.is_finite() {
            xs.push(a);
            ys.push(b);
        }
    }
    (xs, ys)
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// p-value from the t approximation t = rho * sqrt(df / (1 - rho^2)).
fn p_from_rho(rho: f64, df: f64, alternative: Alternative) -> f64 {
    let t = if rho >= 1.0 {
        f64::INFINITY
    } else if rho <= -1.0 {
        f64::NEG_INFINITY
    } else {
        rho * libm::sqrt(df / (1.0 - rho * rho))
    };
    match alternative {
        Alternative::Less => student_t_cdf(t, df),
        Alternative::Greater => student_t_cdf(-t, df),
        Alternative::TwoSided => (2.0 * student_t_cdf(-libm::fabs(t), df)).min(1.0),
    }
}

/// Spearman rank correlation of pairwise-complete cases; ties get
/// mid-ranks, the p-value comes from the t approximation with n-2 df.
pub fn spearman(x: &[f64], y: &[f64], alternative: Alternative) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(CoreError::InsufficientData("series lengths differ".into()));
    }
    let (xs, ys) = complete_pairs(x, y);
    let n = xs.len();
    if n < 3 {
        return Err(CoreError::InsufficientData(alloc::format!("need n >= 3 complete pairs, got {n}")));
    }
    let rx = midranks(&xs);
    let ry = midranks(&ys);
    if is_constant(&rx) || is_constant(&ry) {
        return Err(CoreError::ConstantInput("series constant after rank transform".into()));
    }
    let rho = pearson(&rx, &ry).clamp(-1.0, 1.0);
    let p = p_from_rho(rho, (n - 2) as f64, alternative);
    Ok(CorrelationResult {
        rho,
        p,
        n,
        alternative,
        partialed_on: None,
        bh_rejected: None,
        warning: None,
    })
}

/// Exact permutation p-value for small samples (n <= 10): the observed rho
/// is compared against the full permutation distribution of y.
pub fn spearman_exact_perm(x: &[f64], y: &[f64], alternative: Alternative) -> Result<CorrelationResult> {
    let mut result = spearman(x, y, alternative)?;
    if result.n > 10 {
        return Err(CoreError::InsufficientData(alloc::format!(
            "exact permutation limited to n <= 10, got {}",
            result.n
        )));
    }
    let (xs, ys) = complete_pairs(x, y);
    let rx = midranks(&xs);
    let mut ry = midranks(&ys);
    let observed = result.rho;

    let mut at_least = 0u64;
    let mut total = 0u64;
    let eps = 1e-12;
    permute(&mut ry, 0, &mut |perm| {
        let rho = pearson(&rx, perm).clamp(-1.0, 1.0);
        let hit = match alternative {
            Alternative::Less => rho <= observed + eps,
            Alternative::Greater => rho >= observed - eps,
            Alternative::TwoSided => libm::fabs(rho) >= libm::fabs(observed) - eps,
        };
        at_least += hit as u64;
        total += 1;
    });
    result.p = at_least as f64 / total as f64;
    Ok(result)
}

fn permute(values: &mut [f64], k: usize, visit: &mut impl FnMut(&[f64])) {
    if k == values.len() {
        visit(values);
        return;
    }
    for i in k..values.len() {
        values.swap(k, i);
        permute(values, k + 1, visit);
        values.swap(k, i);
    }
}

/// Partial Spearman correlation of x and y controlling for one covariate,
/// computed on mid-ranks of triple-complete cases; p from t with n-3 df.
pub fn partial_spearman(
    x: &[f64],
    y: &[f64],
    covariate: &[f64],
    covariate_name: &str,
    alternative: Alternative,
) -> Result<CorrelationResult> {
    if x.len() != y.len() || x.len() != covariate.len() {
        return Err(CoreError::InsufficientData("series lengths differ".into()));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut zs = Vec::new();
    for ((&a, &b), &c) in x.iter().zip(y.iter()).zip(covariate.iter()) {
        if a.is_finite() && b.is_finite() && c.is_finite() {
            xs.push(a);
            ys.push(b);
            zs.push(c);
        }
    }
    let n = xs.len();
    if n < 4 {
        return Err(CoreError::InsufficientData(alloc::format!("need n >= 4 complete triples, got {n}")));
    }
    let rz = midranks(&zs);
    if is_constant(&rz) {
        let mut fallback = spearman(&xs, &ys, alternative)?;
        fallback.warning = Some(alloc::format!(
            "covariate '{covariate_name}' constant; plain correlation reported"
        ));
        return Ok(fallback);
    }
    let rx = midranks(&xs);
    let ry = midranks(&ys);
    if is_constant(&rx) || is_constant(&ry) {
        return Err(CoreError::ConstantInput("series constant after rank transform".into()));
    }
    let r_xy = pearson(&rx, &ry).clamp(-1.0, 1.0);
    let r_xz = pearson(&rx, &rz).clamp(-1.0, 1.0);
    let r_yz = pearson(&ry, &rz).clamp(-1.0, 1.0);
    if libm::fabs(r_xz) >= 1.0 - 1e-12 || libm::fabs(r_yz) >= 1.0 - 1e-12 {
        return Err(CoreError::CollinearCovariate);
    }
    let rho =
        ((r_xy - r_xz * r_yz) / libm::sqrt((1.0 - r_xz * r_xz) * (1.0 - r_yz * r_yz))).clamp(-1.0, 1.0);
    let p = p_from_rho(rho, (n - 3) as f64, alternative);
    Ok(CorrelationResult {
        rho,
        p,
        n,
        alternative,
        partialed_on: Some(covariate_name.into()),
        bh_rejected: None,
        warning: None,
    })
}
