//! Cubic B-spline bases and the additive regression spline built on them.

use nalgebra::{DMatrix, DVector};

use crate::data::DataSet;
use crate::error::{Error, Result};

const DEGREE: usize = 3;

/// Cubic B-spline basis on `[lo, hi]` with clamped boundary knots.
/// Inputs outside the boundary are clamped to it.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicBSplineBasis {
    knots: Vec<f64>,
}

impl CubicBSplineBasis {
    pub fn new(lo: f64, hi: f64, interior: &[f64]) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "bad spline boundary [{lo}, {hi}]"
            )));
        }
        let mut inner: Vec<f64> = interior.iter().map(|k| k.clamp(lo, hi)).collect();
        inner.sort_by(f64::total_cmp);
        let mut knots = vec![lo; DEGREE + 1];
        knots.extend(inner);
        knots.extend(std::iter::repeat_n(hi, DEGREE + 1));
        Ok(Self { knots })
    }

    /// Interior knots at evenly spaced sample quantiles of `values`, such that
    /// the basis has `count` functions.
    pub fn at_quantiles(values: &[f64], count: usize) -> Result<Self> {
        if count < DEGREE + 1 {
            return Err(Error::InvalidParameter(format!(
                "a cubic basis needs at least {} functions, got {count}",
                DEGREE + 1
            )));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        let k = count - (DEGREE + 1);
        let interior: Vec<f64> = (1..=k)
            .map(|i| sample_quantile(&sorted, i as f64 / (k + 1) as f64))
            .collect();
        Self::new(lo, hi, &interior)
    }

    pub fn len(&self) -> usize {
        self.knots.len() - (DEGREE + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// All basis function values at `x` (they sum to one).
    pub fn values(&self, x: f64) -> Vec<f64> {
        let nb = self.len();
        let mut out = vec![0.0; nb];
        let (lo, hi) = self.bounds();
        if hi <= lo {
            out[0] = 1.0;
            return out;
        }
        let x = x.clamp(lo, hi);
        let t = &self.knots;
        let mut span = t.partition_point(|&k| k <= x).saturating_sub(1);
        span = span.clamp(DEGREE, nb - 1);
        while span > DEGREE && t[span] >= t[span + 1] {
            span -= 1;
        }
        // de Boor / Cox recursion for the DEGREE+1 nonzero functions
        let mut n = [0.0; DEGREE + 1];
        let mut left = [0.0; DEGREE + 1];
        let mut right = [0.0; DEGREE + 1];
        n[0] = 1.0;
        for j in 1..=DEGREE {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let den = right[r + 1] + left[j - r];
                let temp = if den > 0.0 { n[r] / den } else { 0.0 };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        for (r, v) in n.iter().enumerate() {
            out[span - DEGREE + r] = *v;
        }
        out
    }
}

/// Linear-interpolation sample quantile of an ascending slice.
pub(crate) fn sample_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Additive model `b0 + sum_j f_j(x_j)` with each `f_j` in a cubic B-spline
/// space of dimension `df` (the constant is absorbed by the intercept).
#[derive(Debug, Clone)]
pub struct AdditiveSplineFit {
    bases: Vec<CubicBSplineBasis>,
    df: usize,
    intercept: f64,
    coef: DVector<f64>,
}

impl AdditiveSplineFit {
    pub(crate) fn fit(data: &DataSet, df: usize) -> Result<Self> {
        if df < DEGREE {
            return Err(Error::InvalidParameter(format!(
                "spline degrees of freedom must be at least {DEGREE}, got {df}"
            )));
        }
        let bases = (0..data.d())
            .map(|j| {
                let col: Vec<f64> = data.x().column(j).iter().copied().collect();
                CubicBSplineBasis::at_quantiles(&col, df + 1)
            })
            .collect::<Result<Vec<_>>>()?;
        let p = 1 + data.d() * df;
        let mut design = DMatrix::zeros(data.n(), p);
        for i in 0..data.n() {
            design[(i, 0)] = 1.0;
            fill_row(&bases, df, |j| data.x()[(i, j)], |c, v| design[(i, c)] = v);
        }
        let svd = design.svd(true, true);
        let sol = svd
            .solve(data.y(), 1e-10 * svd.singular_values.max())
            .map_err(|e| Error::RankDeficient(e.into()))?;
        Ok(Self {
            bases,
            df,
            intercept: sol[0],
            coef: sol.rows(1, p - 1).into_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    pub fn df(&self) -> usize {
        self.df
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut acc = self.intercept;
        fill_row(&self.bases, self.df, |j| x[j], |c, v| acc += self.coef[c - 1] * v);
        acc
    }
}

/// Writes the basis expansion of one observation; column 0 is reserved for
/// the intercept and the first basis function of each coordinate is dropped.
fn fill_row(
    bases: &[CubicBSplineBasis],
    df: usize,
    feature: impl Fn(usize) -> f64,
    mut put: impl FnMut(usize, f64),
) {
    for (j, basis) in bases.iter().enumerate() {
        let vals = basis.values(feature(j));
        for (b, v) in vals.iter().skip(1).enumerate() {
            put(1 + j * df + b, *v);
        }
    }
}
