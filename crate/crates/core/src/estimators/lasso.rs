//! Cyclic coordinate descent for the lasso and elastic net.
//!
//! The solver works on a design whose columns are already centered (and,
//! inside the estimators, scaled to unit mean square) and a centered
//! response, minimizing
//!
//! ```text
//! (1/2n) |y - X b|^2 + lambda * (gamma |b|_1 + (1 - gamma)/2 |b|^2)
//! ```
//!
//! Convergence is certified by the duality gap of the equivalent lasso on
//! the ridge-augmented design `[X; sqrt(n lambda (1-gamma)) I]`. The gap is
//! measured relative to the null objective `|y|^2 / 2n`.

use nalgebra::{DMatrix, DVector};

use super::model::FittedModel;
use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::linalg::{center_columns, column_rms};

#[derive(Debug, Clone, Copy)]
pub struct CdOptions {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CdSolution {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    /// Relative duality gap at exit (relative gradient norm when there is no
    /// l1 term).
    pub gap: f64,
}

struct Problem<'a> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    l1: f64,
    l2: f64,
    n: f64,
    col_sq: Vec<f64>,
}

impl<'a> Problem<'a> {
    fn new(x: &'a DMatrix<f64>, y: &'a [f64], lambda: f64, gamma: f64) -> Self {
        let n = x.nrows() as f64;
        let col_sq = x.column_iter().map(|c| c.norm_squared() / n).collect();
        Self {
            x,
            y,
            l1: lambda * gamma,
            l2: lambda * (1.0 - gamma),
            n,
            col_sq,
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        let n = self.x.nrows();
        &self.x.as_slice()[j * n..(j + 1) * n]
    }

    fn null_objective(&self) -> f64 {
        0.5 * self.y.iter().map(|v| v * v).sum::<f64>() / self.n
    }

    fn residual(&self, beta: &[f64]) -> Vec<f64> {
        let mut r = self.y.to_vec();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (ri, xi) in r.iter_mut().zip(self.col(j)) {
                    *ri -= b * xi;
                }
            }
        }
        r
    }

    fn correlations(&self, r: &[f64]) -> Vec<f64> {
        (0..self.x.ncols())
            .map(|j| dot(self.col(j), r) / self.n)
            .collect()
    }

    /// Relative duality gap (or relative gradient norm without an l1 term).
    fn gap(&self, beta: &[f64], r: &[f64]) -> f64 {
        let scale = self.null_objective().max(f64::MIN_POSITIVE);
        let corr = self.correlations(r);
        if self.l1 == 0.0 {
            let g = corr
                .iter()
                .zip(beta)
                .map(|(c, b)| (c - self.l2 * b).abs())
                .fold(0.0, f64::max);
            return g / (2.0 * scale).sqrt();
        }
        let rr: f64 = r.iter().map(|v| v * v).sum();
        let b1: f64 = beta.iter().map(|b| b.abs()).sum();
        let b2: f64 = beta.iter().map(|b| b * b).sum();
        let primal = 0.5 * rr / self.n + self.l1 * b1 + 0.5 * self.l2 * b2;
        // gradient of the augmented lasso at the residual, divided by n
        let g_inf = corr
            .iter()
            .zip(beta)
            .map(|(c, b)| (c - self.l2 * b).abs())
            .fold(0.0, f64::max);
        let s = if g_inf > self.l1 { self.l1 / g_inf } else { 1.0 };
        // |y_aug - s r_aug|^2 = |y - s r|^2 + s^2 n l2 |b|^2
        let dist: f64 = self
            .y
            .iter()
            .zip(r)
            .map(|(y, ri)| (y - s * ri).powi(2))
            .sum::<f64>()
            + s * s * self.n * self.l2 * b2;
        let yy: f64 = self.y.iter().map(|v| v * v).sum();
        let dual = 0.5 * (yy - dist) / self.n;
        (primal - dual).max(0.0) / scale
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Coordinate descent on a centered design and centered response.
pub fn solve_elastic_net(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    gamma: f64,
    warm_start: Option<&[f64]>,
    opts: CdOptions,
) -> Result<CdSolution> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if !(lambda >= 0.0) || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter(format!(
            "elastic net needs lambda >= 0 and gamma in [0, 1], got ({lambda}, {gamma})"
        )));
    }
    let p = Problem::new(x, y, lambda, gamma);
    let d = x.ncols();
    let mut beta = match warm_start {
        Some(w) if w.len() == d => w.to_vec(),
        _ => vec![0.0; d],
    };
    let mut r = p.residual(&beta);
    let y_mag = (2.0 * p.null_objective()).sqrt().max(f64::MIN_POSITIVE);
    let mut gap = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        let mut max_step: f64 = 0.0;
        for j in 0..d {
            let a = p.col_sq[j];
            if a == 0.0 {
                beta[j] = 0.0;
                continue;
            }
            let col = p.col(j);
            let old = beta[j];
            let rho = dot(col, &r) / p.n + a * old;
            let new = soft_threshold(rho, p.l1) / (a + p.l2);
            if new != old {
                let delta = new - old;
                for (ri, xi) in r.iter_mut().zip(col) {
                    *ri -= delta * xi;
                }
                beta[j] = new;
                max_step = max_step.max(delta.abs() * a.sqrt());
            }
        }
        if max_step <= 1e-7 * y_mag || sweep % 10 == 0 {
            // refresh the residual to shed accumulated rounding
            r = p.residual(&beta);
            gap = p.gap(&beta, &r);
            if gap <= opts.tol {
                return Ok(CdSolution { beta, sweeps: sweep, gap });
            }
        }
    }
    Err(Error::NotConverged {
        sweeps: opts.max_sweeps,
        gap,
    })
}

/// Largest violation of the optimality conditions of the objective above:
/// for zero coordinates `|x_j'r/n| - lambda*gamma` (if positive), otherwise
/// `|x_j'r/n - lambda(1-gamma) b_j - lambda*gamma*sign(b_j)|`.
pub fn kkt_violation(x: &DMatrix<f64>, y: &[f64], beta: &[f64], lambda: f64, gamma: f64) -> f64 {
    let p = Problem::new(x, y, lambda, gamma);
    let r = p.residual(beta);
    p.correlations(&r)
        .iter()
        .zip(beta)
        .map(|(c, &b)| {
            if b == 0.0 {
                (c.abs() - p.l1).max(0.0)
            } else {
                (c - p.l2 * b - p.l1 * b.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Smallest lambda at which the lasso solution is identically zero.
pub fn lambda_max(x: &DMatrix<f64>, y: &[f64], gamma: f64) -> f64 {
    let n = x.nrows() as f64;
    let g = x
        .column_iter()
        .map(|c| c.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().abs() / n)
        .fold(0.0, f64::max);
    g / gamma.max(1e-3)
}

/// Centered, unit-mean-square design used by the penalized estimators.
pub(crate) struct Standardized {
    pub x: DMatrix<f64>,
    pub y: Vec<f64>,
    x_mean: DVector<f64>,
    x_scale: DVector<f64>,
    y_mean: f64,
}

impl Standardized {
    pub fn new(data: &DataSet) -> Self {
        let (mut xc, x_mean) = center_columns(data.x());
        let mut x_scale = column_rms(&xc);
        for (j, mut col) in xc.column_iter_mut().enumerate() {
            if x_scale[j] > 0.0 {
                col /= x_scale[j];
            } else {
                x_scale[j] = 1.0;
                col.fill(0.0);
            }
        }
        let y_mean = data.y().mean();
        let y = data.y().iter().map(|v| v - y_mean).collect();
        Self {
            x: xc,
            y,
            x_mean,
            x_scale,
            y_mean,
        }
    }

    /// Coefficients on the original feature scale plus intercept.
    pub fn to_original(&self, beta: &[f64]) -> (f64, DVector<f64>) {
        let coef = DVector::from_iterator(
            beta.len(),
            beta.iter().zip(self.x_scale.iter()).map(|(b, s)| b / s),
        );
        (self.y_mean - self.x_mean.dot(&coef), coef)
    }
}

pub(crate) fn fit_elastic_net(data: &DataSet, lambda: f64, gamma: f64, kind: &str) -> Result<FittedModel> {
    let std = Standardized::new(data);
    let sol = solve_elastic_net(&std.x, &std.y, lambda, gamma, None, CdOptions::default())?;
    let (intercept, coef) = std.to_original(&sol.beta);
    Ok(FittedModel::linear(intercept, coef, kind, Some(lambda)))
}

/// Fits along `lambdas` (any order) with warm starts from the neighbouring
/// larger penalty. Output follows the input order.
pub(crate) fn fit_elastic_net_path(
    data: &DataSet,
    lambdas: &[f64],
    gamma: f64,
    kind: &str,
) -> Result<Vec<FittedModel>> {
    let std = Standardized::new(data);
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
    let mut out: Vec<Option<FittedModel>> = vec![None; lambdas.len()];
    let mut warm: Option<Vec<f64>> = None;
    for idx in order {
        let sol = solve_elastic_net(
            &std.x,
            &std.y,
            lambdas[idx],
            gamma,
            warm.as_deref(),
            CdOptions::default(),
        )?;
        let (intercept, coef) = std.to_original(&sol.beta);
        out[idx] = Some(FittedModel::linear(intercept, coef, kind, Some(lambdas[idx])));
        warm = Some(sol.beta);
    }
    Ok(out.into_iter().map(|m| m.expect("every lambda visited")).collect())
}

/// Log-spaced grid from `lambda_max` (standardized scale) down to
/// `ratio * lambda_max`.
pub fn lasso_lambda_grid(data: &DataSet, count: usize, ratio: f64) -> Vec<f64> {
    let std = Standardized::new(data);
    let top = lambda_max(&std.x, &std.y, 1.0).max(1e-12);
    if count <= 1 {
        return vec![top];
    }
    (0..count)
        .map(|i| top * ratio.powf(i as f64 / (count - 1) as f64))
        .collect()
}
