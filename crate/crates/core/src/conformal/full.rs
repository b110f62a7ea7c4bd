use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::score::ConformityScore;
use crate::data::{DataSet, MiscoverageLevel};
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::interval::PredictionSet;
use crate::quantile::ceil_index;

/// Equally spaced trial values for the response, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialGrid {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl TrialGrid {
    pub const DEFAULT_COUNT: usize = 200;

    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "trial grid needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "trial grid needs at least 2 points, got {count}"
            )));
        }
        Ok(Self { lo, hi, count })
    }

    /// `[min(y) - r, max(y) + r]` with `r` the range of `y` (1 if the
    /// responses are all equal), `count` points.
    pub fn around(y: &[f64], count: usize) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::EmptySample);
        }
        let lo = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let r = if hi > lo { hi - lo } else { 1.0 };
        Self::new(lo - r, hi + r, count)
    }

    pub fn default_for(data: &DataSet) -> Result<Self> {
        Self::around(data.y().as_slice(), Self::DEFAULT_COUNT)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.count - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        let step = self.step();
        (0..self.count)
            .map(|i| if i + 1 == self.count { self.hi } else { self.lo + i as f64 * step })
            .collect()
    }
}

/// Full conformal prediction set at `x`: trial value `y` is kept iff the
/// score of `(x, y)` ranks among the `ceil((1 - alpha)(n + 1))` smallest of
/// the `n + 1` augmented-sample scores (ties count against `y`).
///
/// Linear smoothers with absolute scores are handled with two fits per query;
/// everything else refits once per trial value.
pub fn full_conformal(
    alg: &dyn Estimator,
    data: &DataSet,
    x: &[f64],
    alpha: MiscoverageLevel,
    grid: &TrialGrid,
    score: &ConformityScore,
) -> Result<PredictionSet> {
    data.check_dim(x)?;
    let grid = TrialGrid::new(grid.lo, grid.hi, grid.count)?;
    let n = data.n();
    let threshold = ceil_index((1.0 - alpha.alpha()) * (n + 1) as f64);
    let trial = grid.points();

    let accepted: Vec<bool> = if alg.is_linear_smoother() && !score.is_weighted() {
        let (a, b) = smoother_coefficients(alg, data, x)?;
        let y_train = data.y();
        trial
            .iter()
            .map(|&y| {
                let own = (y - a[n] - y * b[n]).abs();
                let rank = 1 + (0..n)
                    .filter(|&i| (y_train[i] - a[i] - y * b[i]).abs() <= own)
                    .count();
                rank <= threshold
            })
            .collect()
    } else {
        trial
            .par_iter()
            .map(|&y| {
                let rank = trial_rank(alg, data, x, y, score).map_err(|e| Error::TrialFit {
                    y,
                    source: Box::new(e),
                })?;
                Ok(rank <= threshold)
            })
            .collect::<Result<_>>()?
    };

    let points = trial
        .iter()
        .zip(accepted)
        .filter(|(_, keep)| *keep)
        .map(|(y, _)| *y)
        .collect();
    Ok(PredictionSet::from_grid_points(points, grid.step()))
}

/// Exact membership of `y` in the full conformal set at `x`, without a grid.
pub fn full_conformal_accepts(
    alg: &dyn Estimator,
    data: &DataSet,
    x: &[f64],
    y: f64,
    alpha: MiscoverageLevel,
    score: &ConformityScore,
) -> Result<bool> {
    data.check_dim(x)?;
    let threshold = ceil_index((1.0 - alpha.alpha()) * (data.n() + 1) as f64);
    Ok(trial_rank(alg, data, x, y, score)? <= threshold)
}

/// `(n + 1) pi(y)`: how many augmented scores are at most the new point's.
fn trial_rank(alg: &dyn Estimator, data: &DataSet, x: &[f64], y: f64, score: &ConformityScore) -> Result<usize> {
    let aug = data.augmented(x, y)?;
    let scores = score.fit(alg, &aug)?.scores(&aug)?;
    let own = scores[data.n()];
    Ok(scores.iter().filter(|&&s| s <= own).count())
}

/// Fitted values at the augmented rows are `a + y b` for a linear smoother;
/// recover `a` and `b` from the fits with `y = 0` and `y = 1`.
fn smoother_coefficients(alg: &dyn Estimator, data: &DataSet, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let at = |y: f64| -> Result<Vec<f64>> {
        let aug = data.augmented(x, y)?;
        alg.fit(&aug)
            .and_then(|m| m.predict_rows(aug.x()))
            .map_err(|e| Error::TrialFit {
                y,
                source: Box::new(e),
            })
    };
    let a = at(0.0)?;
    let one = at(1.0)?;
    let b = one.iter().zip(&a).map(|(f1, f0)| f1 - f0).collect();
    Ok((a, b))
}
