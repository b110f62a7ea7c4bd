use rayon::prelude::*;

use super::band::{BandFold, BandVariant, ConformalBand, InSamplePoint, MultiSplitBand};
use super::score::ConformityScore;
use crate::data::{split_indices, DataSet, MiscoverageLevel, SplitConfig};
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::quantile::{finite_sample_quantile, kth_smallest_sorted, quantile_rank, sorted, QuantileRule};

/// Fit on all rows; halfwidth is the plain-rule quantile of the in-sample
/// scores. Has no coverage guarantee.
pub fn naive_band(
    alg: &dyn Estimator,
    data: &DataSet,
    alpha: MiscoverageLevel,
    score: &ConformityScore,
) -> Result<ConformalBand> {
    let fit = score.fit(alg, data)?;
    let halfwidth = finite_sample_quantile(&fit.scores(data)?, alpha, QuantileRule::Plain)?;
    Ok(single_fold(BandVariant::Naive, alpha, data, fit, halfwidth, (0..data.n()).collect()))
}

fn single_fold(
    variant: BandVariant,
    alpha: MiscoverageLevel,
    data: &DataSet,
    fit: super::score::ScoredFit,
    halfwidth: f64,
    fit_indices: Vec<usize>,
) -> ConformalBand {
    ConformalBand {
        variant,
        alpha,
        dim: data.d(),
        folds: vec![BandFold {
            fit,
            halfwidth,
            fit_indices,
        }],
        in_sample: None,
    }
}

/// Split conformal: fit on the first fold, calibrate on the second with
/// `k = ceil((|I2| + 1)(1 - alpha))`; `k > |I2|` gives an infinite band.
pub fn split_conformal(
    alg: &dyn Estimator,
    data: &DataSet,
    alpha: MiscoverageLevel,
    cfg: &SplitConfig,
    score: &ConformityScore,
) -> Result<ConformalBand> {
    let (fit_idx, cal_idx) = split_indices(data.n(), cfg)?;
    let fit = score.fit(alg, &data.subset(&fit_idx))?;
    let cal = fit.scores(&data.subset(&cal_idx))?;
    let halfwidth = finite_sample_quantile(&cal, alpha, QuantileRule::Augmented)?;
    Ok(single_fold(BandVariant::Split, alpha, data, fit, halfwidth, fit_idx))
}

/// Intersection of `seeds.len()` split bands at level `alpha / N`.
pub fn multi_split_conformal(
    alg: &dyn Estimator,
    data: &DataSet,
    alpha: MiscoverageLevel,
    ratio: f64,
    seeds: &[u64],
    score: &ConformityScore,
) -> Result<MultiSplitBand> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("multi-split needs at least one split".into()));
    }
    let mut uniq = seeds.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    if uniq.len() != seeds.len() {
        return Err(Error::InvalidParameter("multi-split seeds must be distinct".into()));
    }
    let level = alpha.bonferroni(seeds.len());
    let bands = seeds
        .par_iter()
        .map(|&seed| split_conformal(alg, data, level, &SplitConfig::new(seed, ratio)?, score))
        .collect::<Result<Vec<_>>>()?;
    Ok(MultiSplitBand {
        alpha: alpha.alpha(),
        bands,
    })
}

/// Jackknife band: plain-rule quantile of leave-one-out scores around the
/// full-data fit.
pub fn jackknife_band(
    alg: &dyn Estimator,
    data: &DataSet,
    alpha: MiscoverageLevel,
    score: &ConformityScore,
) -> Result<ConformalBand> {
    if data.n() < 2 {
        return Err(Error::InvalidParameter(format!(
            "jackknife needs at least 2 observations, got {}",
            data.n()
        )));
    }
    let loo = (0..data.n())
        .into_par_iter()
        .map(|i| {
            let fit = score.fit(alg, &data.without_row(i)?)?;
            Ok(fit.scores(&data.subset(&[i]))?[0])
        })
        .collect::<Result<Vec<f64>>>()?;
    let halfwidth = finite_sample_quantile(&loo, alpha, QuantileRule::Plain)?;
    let fit = score.fit(alg, data)?;
    Ok(single_fold(BandVariant::Jackknife, alpha, data, fit, halfwidth, (0..data.n()).collect()))
}

/// Rank-one-out split conformal. Each fold's models are fitted on that fold
/// and calibrate the rows of the other fold; row `i` gets the `m`-th smallest
/// score among the other calibration rows, `m = ceil(|I_k^c| (1 - alpha))`.
/// New points use the relaxed halfwidth of the first fold.
pub fn roo_split_conformal(
    alg: &dyn Estimator,
    data: &DataSet,
    alpha: MiscoverageLevel,
    cfg: &SplitConfig,
    score: &ConformityScore,
) -> Result<ConformalBand> {
    roo_band(alg, data, alpha, cfg, score, BandVariant::Roo)
}

/// Conservative rank-one-out: one halfwidth per fold, the `m`-th smallest
/// calibration score with `m = ceil((1 - alpha) |I_k^c|) + 1`.
pub fn roo_relaxed(
    alg: &dyn Estimator,
    data: &DataSet,
    alpha: MiscoverageLevel,
    cfg: &SplitConfig,
    score: &ConformityScore,
) -> Result<ConformalBand> {
    roo_band(alg, data, alpha, cfg, score, BandVariant::RooRelaxed)
}

fn roo_band(
    alg: &dyn Estimator,
    data: &DataSet,
    alpha: MiscoverageLevel,
    cfg: &SplitConfig,
    score: &ConformityScore,
    variant: BandVariant,
) -> Result<ConformalBand> {
    if data.n() < 4 {
        return Err(Error::InvalidParameter(format!(
            "rank-one-out split needs at least 4 observations, got {}",
            data.n()
        )));
    }
    let (first, second) = split_indices(data.n(), cfg)?;
    let parts = [(first.clone(), second.clone()), (second, first)];
    let fitted = parts
        .par_iter()
        .map(|(fit_idx, cal_idx)| {
            let fit = score.fit(alg, &data.subset(fit_idx))?;
            let cal = fit.scores(&data.subset(cal_idx))?;
            Ok((fit, cal))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut folds = Vec::with_capacity(2);
    let mut points: Vec<Option<InSamplePoint>> = vec![None; data.n()];
    for (k, ((fit, cal), (fit_idx, cal_idx))) in fitted.into_iter().zip(parts).enumerate() {
        let fold = BandFold {
            fit,
            halfwidth: relaxed_halfwidth(&cal, alpha),
            fit_indices: fit_idx,
        };
        let widths = match variant {
            BandVariant::Roo => roo_point_halfwidths(&cal, alpha),
            _ => vec![fold.halfwidth; cal.len()],
        };
        for ((&i, &s), &w) in cal_idx.iter().zip(&cal).zip(&widths) {
            points[i] = Some(InSamplePoint {
                fold: k,
                score: s,
                halfwidth: w,
                interval: fold.interval(&data.row(i), w)?,
            });
        }
        folds.push(fold);
    }
    Ok(ConformalBand {
        variant,
        alpha,
        dim: data.d(),
        folds,
        in_sample: Some(points.into_iter().map(|p| p.expect("every row calibrated once")).collect()),
    })
}

/// For each score, the `m`-th smallest among the others with
/// `m = ceil(c (1 - alpha))`, `c` the number of scores; `+inf` when `m > c - 1`.
pub(crate) fn roo_point_halfwidths(scores: &[f64], alpha: MiscoverageLevel) -> Vec<f64> {
    let c = scores.len();
    let m = quantile_rank(c - 1, alpha, QuantileRule::Augmented);
    let s = sorted(scores);
    scores
        .iter()
        .map(|&r| {
            if m > c - 1 {
                return f64::INFINITY;
            }
            // position of (a copy of) r in the sorted array
            let pos = s.partition_point(|&v| v < r);
            if pos > m - 1 {
                s[m - 1]
            } else {
                s[m]
            }
        })
        .collect()
}

/// `m`-th smallest of all scores with `m = ceil((1 - alpha) c) + 1`.
pub(crate) fn relaxed_halfwidth(scores: &[f64], alpha: MiscoverageLevel) -> f64 {
    let m = quantile_rank(scores.len(), alpha, QuantileRule::Plain) + 1;
    kth_smallest_sorted(&sorted(scores), m)
}
