//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Column means and the column-centered copy of `x`.
pub(crate) fn center_columns(x: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let n = x.nrows() as f64;
    let means = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let mut centered = x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    (centered, means)
}

/// Root mean square of each column (population scale of centered columns).
pub(crate) fn column_rms(xc: &DMatrix<f64>) -> DVector<f64> {
    let n = xc.nrows() as f64;
    DVector::from_iterator(xc.ncols(), xc.column_iter().map(|c| (c.norm_squared() / n).sqrt()))
}

/// Cholesky factor of a symmetric positive definite matrix, rejecting
/// numerically singular systems.
///
/// The check runs on the unit-diagonal rescaling of `g`, so it measures
/// collinearity rather than column scale.
pub(crate) fn checked_cholesky(g: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    let p = g.nrows();
    let diag: Vec<f64> = (0..p).map(|j| g[(j, j)]).collect();
    let max_diag = diag.iter().cloned().fold(0.0, f64::max);
    if let Some(j) = diag.iter().position(|&v| v <= 1e-12 * max_diag.max(f64::MIN_POSITIVE)) {
        return Err(Error::RankDeficient(format!("column {j} has no variation")));
    }
    let scale: Vec<f64> = diag.iter().map(|v| v.sqrt()).collect();
    let scaled = DMatrix::from_fn(p, p, |i, j| g[(i, j)] / (scale[i] * scale[j]));
    let chol = scaled
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("normal equations are not positive definite".into()))?;
    let l = chol.l_dirty();
    let min_pivot = (0..p).map(|j| l[(j, j)]).fold(f64::INFINITY, f64::min);
    if min_pivot * min_pivot < 1e-12 {
        return Err(Error::RankDeficient(format!(
            "normal equations are numerically singular (pivot {min_pivot:e})"
        )));
    }
    // factor of the original matrix: L_g = D L
    let lg = DMatrix::from_fn(p, p, |i, j| if j <= i { l[(i, j)] * scale[i] } else { 0.0 });
    Ok(Cholesky::pack_dirty(lg))
}
