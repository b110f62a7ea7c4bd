use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::kernel::KernelSmootherFit;
use super::spline::AdditiveSplineFit;
use crate::data::DataSet;
use crate::error::{Error, Result};

/// Anything that trains a regression function from data.
///
/// Conformal guarantees need `fit` to be a symmetric function of the rows.
pub trait Estimator: Send + Sync {
    fn fit(&self, data: &DataSet) -> Result<FittedModel>;

    /// True when, for a fixed design, fitted values at the training points are
    /// a linear function of the response (ridge, kernel smoothing, fixed-knot
    /// splines, ...). Full conformal uses this to avoid a refit per trial value.
    fn is_linear_smoother(&self) -> bool {
        false
    }

    fn name(&self) -> String;
}

/// Summary of a fitted model that can be reported without its internals.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelMeta {
    pub kind: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    /// Zero-based indices of variables with nonzero coefficients (sparse fits).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hyperparameter: Option<f64>,
}

#[derive(Clone)]
enum Predictor {
    Constant(f64),
    Linear { intercept: f64, coef: DVector<f64> },
    Kernel(Arc<KernelSmootherFit>),
    Spline(Arc<AdditiveSplineFit>),
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

/// A trained predictor `x -> real` plus reporting metadata. Immutable.
#[derive(Clone)]
pub struct FittedModel {
    predictor: Predictor,
    meta: ModelMeta,
}

impl fmt::Debug for FittedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FittedModel").field("meta", &self.meta).finish()
    }
}

impl FittedModel {
    pub fn constant(dim: usize, value: f64, kind: &str) -> Self {
        Self {
            predictor: Predictor::Constant(value),
            meta: ModelMeta {
                kind: kind.into(),
                dim,
                intercept: Some(value),
                ..Default::default()
            },
        }
    }

    pub fn linear(intercept: f64, coef: DVector<f64>, kind: &str, hyperparameter: Option<f64>) -> Self {
        let selected = coef
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, _)| j)
            .collect();
        Self {
            meta: ModelMeta {
                kind: kind.into(),
                dim: coef.len(),
                intercept: Some(intercept),
                coefficients: Some(coef.iter().copied().collect()),
                selected: Some(selected),
                hyperparameter,
            },
            predictor: Predictor::Linear { intercept, coef },
        }
    }

    pub(crate) fn kernel(fit: KernelSmootherFit) -> Self {
        Self {
            meta: ModelMeta {
                kind: "kernel_smoother".into(),
                dim: fit.dim(),
                hyperparameter: Some(fit.bandwidth()),
                ..Default::default()
            },
            predictor: Predictor::Kernel(Arc::new(fit)),
        }
    }

    pub(crate) fn spline(fit: AdditiveSplineFit) -> Self {
        Self {
            meta: ModelMeta {
                kind: "bspline_additive".into(),
                dim: fit.dim(),
                intercept: Some(fit.intercept()),
                hyperparameter: Some(fit.df() as f64),
                ..Default::default()
            },
            predictor: Predictor::Spline(Arc::new(fit)),
        }
    }

    /// Wraps an arbitrary function of a `dim`-vector.
    pub fn from_fn<F>(dim: usize, kind: &str, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            predictor: Predictor::Custom(Arc::new(f)),
            meta: ModelMeta {
                kind: kind.into(),
                dim,
                ..Default::default()
            },
        }
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn dim(&self) -> usize {
        self.meta.dim
    }

    pub fn coefficients(&self) -> Option<&DVector<f64>> {
        match &self.predictor {
            Predictor::Linear { coef, .. } => Some(coef),
            _ => None,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        match &self.predictor {
            Predictor::Constant(c) => *c,
            Predictor::Linear { intercept, coef } => {
                intercept + coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
            }
            Predictor::Kernel(k) => k.predict(x),
            Predictor::Spline(s) => s.predict(x),
            Predictor::Custom(f) => f(x),
        }
    }

    /// Predictions for every row of `x`.
    pub fn predict_rows(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.ncols(),
            });
        }
        Ok(match &self.predictor {
            Predictor::Constant(c) => vec![*c; x.nrows()],
            Predictor::Linear { intercept, coef } => {
                (x * coef).iter().map(|v| v + intercept).collect()
            }
            _ => {
                let mut row = vec![0.0; x.ncols()];
                (0..x.nrows())
                    .map(|i| {
                        for (j, slot) in row.iter_mut().enumerate() {
                            *slot = x[(i, j)];
                        }
                        self.predict_unchecked(&row)
                    })
                    .collect()
            }
        })
    }
}

/// `|y_i - model(x_i)|` for every row, in row order.
pub fn absolute_residuals(model: &FittedModel, data: &DataSet) -> Result<Vec<f64>> {
    let preds = model.predict_rows(data.x())?;
    Ok(preds
        .iter()
        .zip(data.y().iter())
        .map(|(p, y)| (y - p).abs())
        .collect())
}
