//! One-sample location tests and intervals: z, sign and Wilcoxon signed-rank.

use serde::Serialize;
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

use crate::interval::Interval;

/// Largest sample size for which the Wilcoxon null is computed exactly.
pub const WILCOXON_EXACT_MAX: usize = 50;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("valid normal")
}

/// Upper `1 - p` quantile of the standard normal.
pub(crate) fn z_upper(p: f64) -> f64 {
    std_normal().inverse_cdf(1.0 - p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZInference {
    pub mean: f64,
    /// Sample standard deviation (divisor `m - 1`).
    pub sd: f64,
    pub interval: Interval,
    /// p-value for `H0: mean <= 0`.
    pub p_greater: f64,
    pub p_two_sided: f64,
}

/// Normal-theory interval `mean +- z_{alpha/2} sd / sqrt(m)` and tests.
/// With zero spread the interval collapses and p-values are 0 or 1.
pub fn z_inference(values: &[f64], alpha: f64) -> ZInference {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    if sd == 0.0 {
        return ZInference {
            mean,
            sd,
            interval: Interval::point(mean),
            p_greater: if mean > 0.0 { 0.0 } else { 1.0 },
            p_two_sided: if mean != 0.0 { 0.0 } else { 1.0 },
        };
    }
    let se = sd / m.sqrt();
    let t = mean / se;
    let normal = std_normal();
    ZInference {
        mean,
        sd,
        interval: Interval::centered(mean, z_upper(alpha / 2.0) * se),
        p_greater: 1.0 - normal.cdf(t),
        p_two_sided: (2.0 * (1.0 - normal.cdf(t.abs()))).min(1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignTest {
    pub positives: usize,
    pub negatives: usize,
    /// Exact zeros, discarded before testing.
    pub zeros: usize,
    pub p_greater: f64,
    pub p_two_sided: f64,
}

/// Exact binomial sign test of `H0: median <= 0`.
pub fn sign_test(values: &[f64]) -> SignTest {
    let positives = values.iter().filter(|&&v| v > 0.0).count();
    let negatives = values.iter().filter(|&&v| v < 0.0).count();
    let zeros = values.len() - positives - negatives;
    let m = positives + negatives;
    if m == 0 {
        return SignTest {
            positives,
            negatives,
            zeros,
            p_greater: 1.0,
            p_two_sided: 1.0,
        };
    }
    let bin = Binomial::new(0.5, m as u64).expect("valid binomial");
    let upper = |k: usize| if k == 0 { 1.0 } else { bin.sf(k as u64 - 1) };
    let p_greater = upper(positives);
    let p_less = bin.cdf(positives as u64);
    SignTest {
        positives,
        negatives,
        zeros,
        p_greater,
        p_two_sided: (2.0 * p_greater.min(p_less)).min(1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WilcoxonTest {
    /// Sum of ranks of the positive values, `|value|` ranked among nonzeros.
    pub statistic: f64,
    pub nonzero: usize,
    pub exact: bool,
    pub p_greater: f64,
    pub p_two_sided: f64,
}

/// Average ranks (1-based) of `values`; ties share the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

/// Null distribution of the sum of a random subset of `doubled` (each item
/// included with probability 1/2). Entry `s` is `P(sum = s)`.
pub fn signed_rank_null(doubled: &[usize]) -> Vec<f64> {
    let total: usize = doubled.iter().sum();
    let mut pmf = vec![0.0; total + 1];
    pmf[0] = 1.0;
    let mut reach = 0;
    for &r in doubled {
        for s in (0..=reach).rev() {
            let p = pmf[s];
            if p != 0.0 {
                pmf[s + r] += 0.5 * p;
                pmf[s] = 0.5 * p;
            }
        }
        reach += r;
    }
    pmf
}

/// Wilcoxon signed-rank test of `H0: median <= 0` (symmetric about 0).
/// Zeros are dropped; exact null for at most [`WILCOXON_EXACT_MAX`] nonzero
/// values, otherwise a normal approximation with continuity and tie
/// corrections.
pub fn wilcoxon_signed_rank(values: &[f64]) -> WilcoxonTest {
    let nz: Vec<f64> = values.iter().copied().filter(|&v| v != 0.0).collect();
    let m = nz.len();
    if m == 0 {
        return WilcoxonTest {
            statistic: 0.0,
            nonzero: 0,
            exact: true,
            p_greater: 1.0,
            p_two_sided: 1.0,
        };
    }
    let abs: Vec<f64> = nz.iter().map(|v| v.abs()).collect();
    let ranks = average_ranks(&abs);
    let statistic: f64 = nz.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();

    if m <= WILCOXON_EXACT_MAX {
        let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
        let pmf = signed_rank_null(&doubled);
        let w2 = (2.0 * statistic).round() as usize;
        let p_greater: f64 = pmf[w2..].iter().sum();
        let p_less: f64 = pmf[..=w2].iter().sum();
        return WilcoxonTest {
            statistic,
            nonzero: m,
            exact: true,
            p_greater: p_greater.min(1.0),
            p_two_sided: (2.0 * p_greater.min(p_less)).min(1.0),
        };
    }

    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let ties: f64 = tie_sizes(&abs).iter().map(|&t| t * t * t - t).sum();
    let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - ties / 48.0;
    let sd = var.sqrt();
    let normal = std_normal();
    let p_greater = 1.0 - normal.cdf((statistic - mean - 0.5) / sd);
    let p_less = normal.cdf((statistic - mean + 0.5) / sd);
    WilcoxonTest {
        statistic,
        nonzero: m,
        exact: false,
        p_greater: p_greater.clamp(0.0, 1.0),
        p_two_sided: (2.0 * p_greater.min(p_less)).clamp(0.0, 1.0),
    }
}

fn tie_sizes(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut start = 0;
    while start < v.len() {
        let mut end = start + 1;
        while end < v.len() && v[end] == v[start] {
            end += 1;
        }
        out.push((end - start) as f64);
        start = end;
    }
    out
}

/// Hodges-Lehmann type interval for the median: order statistics of the
/// Walsh averages `(v_i + v_j)/2, i <= j`, cut at the two-sided `alpha`
/// critical value of the signed-rank statistic. Unbounded when the sample is
/// too small to reach the level.
pub fn wilcoxon_interval(values: &[f64], alpha: f64) -> Interval {
    let m = values.len();
    if m == 0 {
        return Interval::whole_line();
    }
    let mut walsh = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        for j in i..m {
            walsh.push(0.5 * (values[i] + values[j]));
        }
    }
    walsh.sort_by(f64::total_cmp);
    let total = walsh.len();
    let k = walsh_cut(m, alpha);
    if k == 0 || k > total.div_ceil(2) {
        return Interval::whole_line();
    }
    Interval {
        lo: walsh[k - 1],
        hi: walsh[total - k],
    }
}

/// Largest `k` with `P(W <= k - 1) <= alpha / 2` under the untied null.
fn walsh_cut(m: usize, alpha: f64) -> usize {
    if m <= WILCOXON_EXACT_MAX {
        let doubled: Vec<usize> = (1..=m).map(|r| 2 * r).collect();
        let pmf = signed_rank_null(&doubled);
        let mut cdf = 0.0;
        let mut k = 0;
        // W takes integer values; doubled sums are even
        for (w, chunk) in pmf.chunks(2).enumerate() {
            cdf += chunk[0];
            if cdf <= alpha / 2.0 + 1e-12 {
                k = w + 1;
            } else {
                break;
            }
        }
        k
    } else {
        let mf = m as f64;
        let mean = mf * (mf + 1.0) / 4.0;
        let sd = (mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0).sqrt();
        let k = (mean - z_upper(alpha / 2.0) * sd + 0.5).floor();
        if k < 1.0 {
            0
        } else {
            k as usize
        }
    }
}
