use serde::{Deserialize, Serialize};

use super::settings::{SettingSpec, Truth};
use crate::data::MiscoverageLevel;
use crate::error::Result;
use crate::estimators::{Estimator, FittedModel};
use crate::interval::Interval;
use crate::quantile::{finite_sample_quantile, QuantileRule};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Centred at the true mean; halfwidth from the noise law.
    Super,
    /// Centred at a fitted mean; halfwidth from its out-of-sample residuals.
    Regular,
}

#[derive(Debug, Clone)]
pub struct OracleBand {
    pub kind: OracleKind,
    /// `q_alpha` (super, in units of the local noise scale) or `q_{n,alpha}`.
    pub q: f64,
    truth: Truth,
    model: Option<FittedModel>,
}

impl OracleBand {
    pub fn super_oracle(truth: &Truth, alpha: MiscoverageLevel) -> Self {
        Self {
            kind: OracleKind::Super,
            q: truth.noise_quantile(alpha.alpha()),
            truth: truth.clone(),
            model: None,
        }
    }

    /// The fitted mean the regular band is centred on.
    pub fn model(&self) -> Option<&FittedModel> {
        self.model.as_ref()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Interval> {
        match &self.model {
            None => Ok(Interval::centered(self.truth.mean(x), self.q * self.truth.noise_scale(x))),
            Some(m) => Ok(Interval::centered(m.predict(x)?, self.q)),
        }
    }

    /// `mu_hat(x) - mu(x)` for the regular band, 0 for the super band.
    pub fn estimation_error(&self, x: &[f64]) -> Result<f64> {
        match &self.model {
            None => Ok(0.0),
            Some(m) => Ok(m.predict(x)? - self.truth.mean(x)),
        }
    }
}

/// Monte Carlo sizes for the regular oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Independent training sets of size `spec.n`.
    pub fits: usize,
    /// Fresh test draws per fit.
    pub draws: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { fits: 20, draws: 1000 }
    }
}

/// Super and regular oracle bands for `alg` trained on `spec.n` points.
/// The regular halfwidth pools `|Y - mu_hat(X)|` over `cfg.fits` independent
/// fits; the returned band is centred on the first of them.
pub fn oracle_bands(
    truth: &Truth,
    alg: &dyn Estimator,
    spec: &SettingSpec,
    alpha: MiscoverageLevel,
    cfg: &OracleConfig,
) -> Result<(OracleBand, OracleBand)> {
    let mut residuals = Vec::with_capacity(cfg.fits * cfg.draws);
    let mut first = None;
    for f in 0..cfg.fits.max(1) {
        let mut r = rng::seeded(rng::derive_seed(spec.seed, 100 + f as u64));
        let train = truth.sample(spec.n, &mut r)?;
        let model = alg.fit(&train)?;
        let test = truth.sample(cfg.draws.max(1), &mut r)?;
        let pred = model.predict_rows(test.x())?;
        residuals.extend(pred.iter().zip(test.y().iter()).map(|(p, y)| (y - p).abs()));
        first.get_or_insert(model);
    }
    let q = finite_sample_quantile(&residuals, alpha, QuantileRule::Plain)?;
    let regular = OracleBand {
        kind: OracleKind::Regular,
        q,
        truth: truth.clone(),
        model: first,
    };
    Ok((OracleBand::super_oracle(truth, alpha), regular))
}
