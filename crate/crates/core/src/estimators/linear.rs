//! Least squares, ridge and forward stepwise regression. All fit an
//! unpenalized intercept by centering.

use nalgebra::DVector;

use super::model::FittedModel;
use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::linalg::{center_columns, checked_cholesky, column_rms};

pub(crate) fn fit_ols(data: &DataSet) -> Result<FittedModel> {
    if data.n() <= data.d() {
        return Err(Error::RankDeficient(format!(
            "least squares needs n > d (n = {}, d = {}); use ridge or lasso instead",
            data.n(),
            data.d()
        )));
    }
    let (beta, intercept) = solve_centered(data, 0.0)?;
    Ok(FittedModel::linear(intercept, beta, "ols", None))
}

/// Ridge objective `(1/2n)|y - b0 - X b|^2 + (lambda/2)|b|^2`.
pub(crate) fn fit_ridge(data: &DataSet, lambda: f64) -> Result<FittedModel> {
    if lambda == 0.0 && data.n() <= data.d() {
        return fit_ols(data);
    }
    let (beta, intercept) = solve_centered(data, lambda)?;
    Ok(FittedModel::linear(intercept, beta, "ridge", Some(lambda)))
}

/// Solves `(Xc'Xc + n lambda I) b = Xc'yc` and returns `(b, intercept)`.
fn solve_centered(data: &DataSet, lambda: f64) -> Result<(DVector<f64>, f64)> {
    let n = data.n() as f64;
    let (xc, x_mean) = center_columns(data.x());
    let y_mean = data.y().mean();
    let yc = data.y().add_scalar(-y_mean);
    let mut g = xc.tr_mul(&xc);
    for j in 0..g.nrows() {
        g[(j, j)] += n * lambda;
    }
    let rhs = xc.tr_mul(&yc);
    let beta = if lambda > 0.0 {
        g.cholesky()
            .ok_or_else(|| Error::RankDeficient("ridge system not positive definite".into()))?
            .solve(&rhs)
    } else {
        checked_cholesky(&g)?.solve(&rhs)
    };
    let intercept = y_mean - x_mean.dot(&beta);
    Ok((beta, intercept))
}

/// Forward stepwise: `steps` times, add the (standardized) predictor most
/// correlated with the current residual, then refit least squares on the
/// active set.
pub(crate) fn fit_stepwise(data: &DataSet, steps: usize) -> Result<FittedModel> {
    let d = data.d();
    if steps > d {
        return Err(Error::InvalidParameter(format!(
            "stepwise with {steps} steps but only {d} predictors"
        )));
    }
    if steps >= data.n() {
        return Err(Error::RankDeficient(format!(
            "stepwise with {steps} steps needs more than {steps} observations"
        )));
    }
    let (xc, x_mean) = center_columns(data.x());
    let scale = column_rms(&xc);
    let y_mean = data.y().mean();
    let yc = data.y().add_scalar(-y_mean);

    let mut active: Vec<usize> = Vec::with_capacity(steps);
    let mut residual = yc.clone();
    let mut beta_active = DVector::zeros(0);
    for _ in 0..steps {
        let mut best: Option<(usize, f64)> = None;
        for j in (0..d).filter(|j| !active.contains(j)) {
            if scale[j] == 0.0 {
                continue;
            }
            let score = (xc.column(j).dot(&residual) / scale[j]).abs();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        let Some((j, _)) = best else {
            return Err(Error::RankDeficient(
                "no remaining predictor with nonzero variance".into(),
            ));
        };
        active.push(j);
        let xa = xc.select_columns(&active);
        let g = xa.tr_mul(&xa);
        beta_active = checked_cholesky(&g)?.solve(&xa.tr_mul(&yc));
        residual = &yc - &xa * &beta_active;
    }
    let mut beta = DVector::zeros(d);
    for (slot, &j) in active.iter().enumerate() {
        beta[j] = beta_active[slot];
    }
    let intercept = y_mean - x_mean.dot(&beta);
    Ok(FittedModel::linear(intercept, beta, "stepwise", Some(steps as f64)))
}
