//! Intraclass correlation: two-way, average-measures, consistency
//! definition (fixed raters), a.k.a. ICC(3,k).

use alloc::vec::Vec;

use crate::error::{CoreError, Result};

pub const ICC_MODEL: &str = "average fixed raters";

#[derive(Debug, Clone, PartialEq)]
pub struct ICCResult {
    pub icc: f64,
    pub n_targets: usize,
    pub k_raters: usize,
    pub model: &'static str,
}

/// ICC = (MS_rows - MS_error) / MS_rows from the two-way ANOVA without
/// interaction (rows = targets, columns = raters). Can be negative when
/// residual noise dominates the between-target variance.
pub fn icc_average_fixed_raters(rows: &[Vec<f64>]) -> Result<ICCResult> {
    let n = rows.len();
    if n < 2 {
        return Err(CoreError::InsufficientData("need at least 2 targets".into()));
    }
    let k = rows[0].len();
    if k < 2 {
        return Err(CoreError::InsufficientData("need at least 2 raters".into()));
    }
    if rows.iter().any(|r| r.len() != k) {
        return Err(CoreError::InsufficientData("ragged measurement matrix".into()));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CoreError::InsufficientData("missing cell in measurement matrix".into()));
    }

    let total = n * k;
    let grand = rows.iter().flatten().sum::<f64>() / total as f64;
    let row_means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / k as f64).collect();
    let col_means: Vec<f64> = (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();

    let ss_rows = k as f64 * row_means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>();
    let mut ss_err = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (j, &v) in r.iter().enumerate() {
            let resid = v - row_means[i] - col_means[j] + grand;
            ss_err += resid * resid;
        }
    }
    let ms_rows = ss_rows / (n - 1) as f64;
    let ms_err = ss_err / ((n - 1) * (k - 1)) as f64;
    if ms_rows == 0.0 {
        return Err(CoreError::ConstantInput("zero between-target variance, ICC undefined".into()));
    }
    Ok(ICCResult {
        icc: (ms_rows - ms_err) / ms_rows,
        n_targets: n,
        k_raters: k,
        model: ICC_MODEL,
    })
}
