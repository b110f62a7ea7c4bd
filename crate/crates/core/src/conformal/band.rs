use serde::{Deserialize, Serialize, Serializer};

use super::score::{ScoredFit, SpreadModel};
use crate::data::MiscoverageLevel;
use crate::error::{Error, Result};
use crate::estimators::{FittedModel, ModelMeta};
use crate::interval::{ext_real, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandVariant {
    Naive,
    Split,
    Jackknife,
    Roo,
    RooRelaxed,
}

impl BandVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            BandVariant::Naive => "naive",
            BandVariant::Split => "split",
            BandVariant::Jackknife => "jackknife",
            BandVariant::Roo => "roo",
            BandVariant::RooRelaxed => "roo_relaxed",
        }
    }
}

/// One fitted model of a band together with its calibrated halfwidth.
#[derive(Debug, Clone)]
pub struct BandFold {
    pub(crate) fit: ScoredFit,
    pub(crate) halfwidth: f64,
    pub(crate) fit_indices: Vec<usize>,
}

impl BandFold {
    pub fn mean(&self) -> &FittedModel {
        &self.fit.mean
    }

    pub fn spread(&self) -> Option<&SpreadModel> {
        self.fit.spread.as_ref()
    }

    /// Halfwidth used at new points (before multiplying by the spread).
    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    /// Training rows the models were fitted on.
    pub fn fit_indices(&self) -> &[usize] {
        &self.fit_indices
    }

    pub fn interval(&self, x: &[f64], halfwidth: f64) -> Result<Interval> {
        let center = self.fit.mean.predict(x)?;
        Ok(Interval::centered(center, self.fit.scale(x)? * halfwidth))
    }
}

/// Rank-one-out bookkeeping for one training row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InSamplePoint {
    /// Fold whose models produced this row's interval.
    pub fold: usize,
    #[serde(with = "ext_real")]
    pub score: f64,
    #[serde(with = "ext_real")]
    pub halfwidth: f64,
    pub interval: Interval,
}

impl InSamplePoint {
    pub fn covered(&self) -> bool {
        self.score <= self.halfwidth
    }
}

/// A prediction band `mu(x) +- rho(x) d` that can be evaluated anywhere.
#[derive(Debug, Clone)]
pub struct ConformalBand {
    pub(crate) variant: BandVariant,
    pub(crate) alpha: MiscoverageLevel,
    pub(crate) dim: usize,
    pub(crate) folds: Vec<BandFold>,
    pub(crate) in_sample: Option<Vec<InSamplePoint>>,
}

impl ConformalBand {
    pub fn variant(&self) -> BandVariant {
        self.variant
    }

    pub fn alpha(&self) -> MiscoverageLevel {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn folds(&self) -> &[BandFold] {
        &self.folds
    }

    /// Halfwidth at new points (the first fold's for rank-one-out bands).
    pub fn halfwidth(&self) -> f64 {
        self.folds[0].halfwidth
    }

    /// Per-row intervals of the rank-one-out variants.
    pub fn in_sample(&self) -> Option<&[InSamplePoint]> {
        self.in_sample.as_deref()
    }

    /// Fraction of training rows covered by their own in-sample interval.
    pub fn in_sample_coverage(&self) -> Option<f64> {
        self.in_sample.as_ref().map(|pts| {
            pts.iter().filter(|p| p.covered()).count() as f64 / pts.len() as f64
        })
    }

    /// Band value at a new point.
    pub fn evaluate(&self, x: &[f64]) -> Result<Interval> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let fold = &self.folds[0];
        fold.interval(x, fold.halfwidth)
    }

    /// Band value at training row `i`; rank-one-out bands use the row's own
    /// calibrated width, other variants evaluate at `x`.
    pub fn evaluate_in_sample(&self, i: usize, x: &[f64]) -> Result<Interval> {
        match &self.in_sample {
            Some(pts) => pts.get(i).map(|p| p.interval).ok_or_else(|| {
                Error::InvalidParameter(format!("row {i} out of range for {} rows", pts.len()))
            }),
            None => self.evaluate(x),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Serialize)]
struct FoldSummary<'a> {
    #[serde(with = "ext_real")]
    halfwidth: f64,
    model: &'a ModelMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    spread_model: Option<&'a ModelMeta>,
}

#[derive(Serialize)]
struct BandSummary<'a> {
    variant: BandVariant,
    alpha: f64,
    #[serde(with = "ext_real::vec")]
    halfwidths: Vec<f64>,
    folds: Vec<FoldSummary<'a>>,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_vec", default)]
    point_halfwidths: Option<Vec<f64>>,
}

mod opt_vec {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => crate::interval::ext_real::vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }
}

impl Serialize for ConformalBand {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BandSummary {
            variant: self.variant,
            alpha: self.alpha.alpha(),
            halfwidths: self.folds.iter().map(|f| f.halfwidth).collect(),
            folds: self
                .folds
                .iter()
                .map(|f| FoldSummary {
                    halfwidth: f.halfwidth,
                    model: f.fit.mean.meta(),
                    spread_model: f.fit.spread.as_ref().map(|m| m.model().meta()),
                })
                .collect(),
            point_halfwidths: self
                .in_sample
                .as_ref()
                .map(|pts| pts.iter().map(|p| p.halfwidth).collect()),
        }
        .serialize(s)
    }
}

/// Intersection of several split bands, each built at level `alpha / N`.
#[derive(Debug, Clone, Serialize)]
pub struct MultiSplitBand {
    pub(crate) alpha: f64,
    pub(crate) bands: Vec<ConformalBand>,
}

impl MultiSplitBand {
    pub fn bands(&self) -> &[ConformalBand] {
        &self.bands
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Intersection of the member bands at `x`; may be empty.
    pub fn evaluate(&self, x: &[f64]) -> Result<Interval> {
        self.bands.iter().try_fold(Interval::whole_line(), |acc, b| {
            Ok(acc.intersect(&b.evaluate(x)?))
        })
    }
}
