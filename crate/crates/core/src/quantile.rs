//! Finite-sample quantile rules.
//!
//! Both rules return an order statistic of the sample. Duplicates occupy
//! consecutive ranks; there is no randomized tie-breaking.

use serde::{Deserialize, Serialize};

use crate::data::MiscoverageLevel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileRule {
    /// `k = ceil((m + 1)(1 - alpha))`, `+inf` when `k > m`.
    Augmented,
    /// `k = ceil(m (1 - alpha))`.
    Plain,
}

/// `ceil(x)` that ignores floating point noise just above an integer, so that
/// e.g. `10 * 0.9` is treated as exactly 9.
pub fn ceil_index(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

/// Rank used by `rule` on a sample of size `m`.
pub fn quantile_rank(m: usize, level: MiscoverageLevel, rule: QuantileRule) -> usize {
    let coverage = 1.0 - level.alpha();
    let k = match rule {
        QuantileRule::Augmented => ceil_index((m + 1) as f64 * coverage),
        QuantileRule::Plain => ceil_index(m as f64 * coverage),
    };
    k.max(1)
}

/// Sorted copy, ascending (NaN-free input assumed).
pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// The `k`-th smallest value (1-based) of an ascending slice, `+inf` when
/// `k` exceeds its length.
pub fn kth_smallest_sorted(sorted: &[f64], k: usize) -> f64 {
    debug_assert!(k >= 1);
    sorted.get(k - 1).copied().unwrap_or(f64::INFINITY)
}

pub fn finite_sample_quantile(
    values: &[f64],
    level: MiscoverageLevel,
    rule: QuantileRule,
) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidData("NaN in quantile sample".into()));
    }
    let k = quantile_rank(values.len(), level, rule);
    Ok(kth_smallest_sorted(&sorted(values), k))
}
