//! Statistical layer: rank correlations with one-sided p-values, partial
//! correlation, average-fixed-raters ICC, Bland-Altman agreement,
//! Benjamini-Hochberg FDR, Mann-Whitney U and intensity normalization.
//!
//! Missing values are represented as NaN; every test drops incomplete
//! cases pairwise before computing anything.

mod agreement;
mod fdr;
mod icc;
mod normalize;
mod ranks;
mod ranksum;
mod spearman;
mod tdist;

pub use agreement::{bland_altman, BlandAltmanResult};
pub use fdr::bh_fdr;
pub use icc::{icc_average_fixed_raters, ICCResult, ICC_MODEL};
pub use normalize::{rescale_0_1000, standardize_minmax};
pub use ranks::{midranks, pearson};
pub use ranksum::{rank_sum_test, RankSumResult};
pub use spearman::{partial_spearman, spearman, spearman_exact_perm, CorrelationResult};
pub use tdist::{normal_cdf, student_t_cdf};

use core::fmt;

/// Tail of the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alternative {
    Less,
    Greater,
    TwoSided,
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::Less => "less",
            Alternative::Greater => "greater",
            Alternative::TwoSided => "two-sided",
        })
    }
}

impl core::str::FromStr for Alternative {
    type Err = crate::CoreError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "less" => Ok(Alternative::Less),
            "greater" => Ok(Alternative::Greater),
            "two-sided" | "two_sided" | "twosided" => Ok(Alternative::TwoSided),
            other => Err(crate::CoreError::InsufficientData(alloc::format!(
                "unknown alternative '{other}'"
            ))),
        }
    }
}
