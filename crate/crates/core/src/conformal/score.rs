use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::estimators::{Estimator, FittedModel, RegressionAlgorithm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    /// `|y - mu(x)|`
    Absolute,
    /// `|y - mu(x)| / rho(x)` with `rho` a fitted conditional MAD.
    LocallyWeighted,
}

/// How residuals are turned into conformity scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformityScore {
    kind: ScoreKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    mad_algorithm: Option<RegressionAlgorithm>,
}

impl Default for ConformityScore {
    fn default() -> Self {
        Self::absolute()
    }
}

impl ConformityScore {
    pub fn absolute() -> Self {
        Self {
            kind: ScoreKind::Absolute,
            mad_algorithm: None,
        }
    }

    /// Scores scaled by `rho`, fitted by regressing absolute residuals on
    /// the features with `mad_algorithm`.
    pub fn locally_weighted(mad_algorithm: RegressionAlgorithm) -> Self {
        Self {
            kind: ScoreKind::LocallyWeighted,
            mad_algorithm: Some(mad_algorithm),
        }
    }

    pub fn new(kind: ScoreKind, mad_algorithm: Option<RegressionAlgorithm>) -> Result<Self> {
        match (kind, mad_algorithm) {
            (ScoreKind::Absolute, _) => Ok(Self::absolute()),
            (ScoreKind::LocallyWeighted, Some(alg)) => Ok(Self::locally_weighted(alg)),
            (ScoreKind::LocallyWeighted, None) => Err(Error::InvalidParameter(
                "locally weighted scores need a MAD estimator".into(),
            )),
        }
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn mad_algorithm(&self) -> Option<&RegressionAlgorithm> {
        self.mad_algorithm.as_ref()
    }

    pub fn is_weighted(&self) -> bool {
        self.kind == ScoreKind::LocallyWeighted
    }

    /// Fits the mean model (and the spread model when weighted) on `data`.
    pub(crate) fn fit(&self, alg: &dyn Estimator, data: &DataSet) -> Result<ScoredFit> {
        let mean = alg.fit(data)?;
        let spread = match &self.mad_algorithm {
            Some(mad) if self.is_weighted() => {
                let pred = mean.predict_rows(data.x())?;
                Some(SpreadModel::fit(mad, data, &pred)?)
            }
            _ => None,
        };
        Ok(ScoredFit { mean, spread })
    }
}

/// Conditional mean absolute deviation estimate, floored away from zero.
#[derive(Debug, Clone)]
pub struct SpreadModel {
    model: FittedModel,
    floor: f64,
}

impl SpreadModel {
    /// Regresses `|y_i - pred_i|` on `x_i`.
    pub(crate) fn fit(mad: &RegressionAlgorithm, data: &DataSet, pred: &[f64]) -> Result<Self> {
        let abs_res: Vec<f64> = data
            .y()
            .iter()
            .zip(pred)
            .map(|(y, p)| (y - p).abs())
            .collect();
        let mean_abs = abs_res.iter().sum::<f64>() / abs_res.len() as f64;
        let target = data.with_response(abs_res.into())?;
        Ok(Self {
            model: mad.fit(&target)?,
            floor: (1e-6 * mean_abs).max(f64::MIN_POSITIVE),
        })
    }

    pub fn model(&self) -> &FittedModel {
        &self.model
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        Ok(self.model.predict(x)?.max(self.floor))
    }

    pub fn eval_rows(&self, data: &DataSet) -> Result<Vec<f64>> {
        Ok(self
            .model
            .predict_rows(data.x())?
            .into_iter()
            .map(|v| v.max(self.floor))
            .collect())
    }
}

/// A mean model plus, for weighted scores, its spread model.
#[derive(Debug, Clone)]
pub(crate) struct ScoredFit {
    pub mean: FittedModel,
    pub spread: Option<SpreadModel>,
}

impl ScoredFit {
    pub fn scores(&self, data: &DataSet) -> Result<Vec<f64>> {
        let pred = self.mean.predict_rows(data.x())?;
        let mut s: Vec<f64> = pred
            .iter()
            .zip(data.y().iter())
            .map(|(p, y)| (y - p).abs())
            .collect();
        if let Some(spread) = &self.spread {
            for (v, r) in s.iter_mut().zip(spread.eval_rows(data)?) {
                *v /= r;
            }
        }
        Ok(s)
    }

    pub fn scale(&self, x: &[f64]) -> Result<f64> {
        match &self.spread {
            Some(s) => s.eval(x),
            None => Ok(1.0),
        }
    }
}
