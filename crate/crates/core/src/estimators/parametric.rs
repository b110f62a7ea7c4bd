//! Classical Gaussian-theory prediction intervals for least squares and ridge.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::model::FittedModel;
use super::{Estimator, RegressionAlgorithm};
use crate::data::{DataSet, MiscoverageLevel};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::linalg::{center_columns, checked_cholesky};

/// Precomputed pieces of the interval
/// `mu(x) +- t_{df, 1-alpha/2} * sigma * sqrt(1 + 1/n + u' Q u)`, where `u` is
/// the centered query and `Q` is `(Xc'Xc)^-1` for least squares or
/// `A^-1 Xc'Xc A^-1` with `A = Xc'Xc + n lambda I` for ridge.
#[derive(Debug, Clone)]
pub struct ParametricPredictor {
    model: FittedModel,
    x_mean: DVector<f64>,
    quad: DMatrix<f64>,
    sigma: f64,
    df: f64,
    n: usize,
}

impl ParametricPredictor {
    pub fn ols(data: &DataSet) -> Result<Self> {
        let (n, d) = (data.n(), data.d());
        if n <= d + 1 {
            return Err(Error::RankDeficient(format!(
                "parametric least-squares intervals need n > d + 1 (n = {n}, d = {d})"
            )));
        }
        let model = RegressionAlgorithm::ols().fit(data)?;
        let (xc, x_mean) = center_columns(data.x());
        let gram = xc.tr_mul(&xc);
        let quad = checked_cholesky(&gram)?.inverse();
        let df = (n - d - 1) as f64;
        let sigma = (rss(&model, data)? / df).sqrt();
        Ok(Self { model, x_mean, quad, sigma, df, n })
    }

    /// Ridge with the `(1/2n)|r|^2 + (lambda/2)|b|^2` penalty convention; the
    /// residual degrees of freedom are `n - trace(H)`, `H` including the
    /// intercept.
    pub fn ridge(data: &DataSet, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "ridge intervals need a positive penalty, got {lambda}"
            )));
        }
        let n = data.n();
        let model = RegressionAlgorithm::ridge(lambda).fit(data)?;
        let (xc, x_mean) = center_columns(data.x());
        let gram = xc.tr_mul(&xc);
        let mut a = gram.clone();
        for j in 0..a.nrows() {
            a[(j, j)] += n as f64 * lambda;
        }
        let a_inv = a
            .cholesky()
            .ok_or_else(|| Error::RankDeficient("ridge system not positive definite".into()))?
            .inverse();
        let trace_h = 1.0 + (&gram * &a_inv).trace();
        let df = n as f64 - trace_h;
        if df <= 0.0 {
            return Err(Error::RankDeficient(format!(
                "ridge fit leaves no residual degrees of freedom (n = {n}, trace = {trace_h:.3})"
            )));
        }
        let quad = &a_inv * &gram * &a_inv;
        let sigma = (rss(&model, data)? / df).sqrt();
        Ok(Self { model, x_mean, quad, sigma, df, n })
    }

    pub fn model(&self) -> &FittedModel {
        &self.model
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn residual_df(&self) -> f64 {
        self.df
    }

    pub fn interval(&self, x: &[f64], alpha: MiscoverageLevel) -> Result<Interval> {
        let center = self.model.predict(x)?;
        let u = DVector::from_iterator(x.len(), x.iter().zip(self.x_mean.iter()).map(|(a, m)| a - m));
        let spread = (1.0 + 1.0 / self.n as f64 + u.dot(&(&self.quad * &u))).sqrt();
        let t = StudentsT::new(0.0, 1.0, self.df)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .inverse_cdf(1.0 - alpha.alpha() / 2.0);
        Ok(Interval::centered(center, t * self.sigma * spread))
    }
}

fn rss(model: &FittedModel, data: &DataSet) -> Result<f64> {
    let pred = model.predict_rows(data.x())?;
    Ok(pred
        .iter()
        .zip(data.y().iter())
        .map(|(p, y)| (y - p) * (y - p))
        .sum())
}

/// Parametric interval at `x` for a least-squares or ridge `model` trained
/// on `data`.
pub fn parametric_interval(
    model: &FittedModel,
    data: &DataSet,
    x: &[f64],
    alpha: MiscoverageLevel,
) -> Result<Interval> {
    let meta = model.meta();
    let predictor = match (meta.kind.as_str(), meta.hyperparameter) {
        ("ols", _) => ParametricPredictor::ols(data)?,
        ("ridge", Some(lambda)) => ParametricPredictor::ridge(data, lambda)?,
        (kind, _) => {
            return Err(Error::InvalidParameter(format!(
                "parametric intervals need a least-squares or ridge model, got {kind}"
            )))
        }
    };
    predictor.interval(x, alpha)
}
