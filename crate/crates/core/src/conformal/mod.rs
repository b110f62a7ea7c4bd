//! Conformal prediction bands: naive, full, split, multi-split, jackknife and
//! rank-one-out, with absolute or locally weighted scores.

mod band;
mod full;
mod score;
mod split;

pub use band::{BandFold, BandVariant, ConformalBand, InSamplePoint, MultiSplitBand};
pub use full::{full_conformal, full_conformal_accepts, TrialGrid};
pub use score::{ConformityScore, ScoreKind, SpreadModel};
pub use split::{jackknife_band, multi_split_conformal, naive_band, roo_relaxed, roo_split_conformal, split_conformal};

use crate::error::Result;
use crate::interval::Interval;

/// Value of `band` at `x`.
pub fn evaluate_band(band: &ConformalBand, x: &[f64]) -> Result<Interval> {
    band.evaluate(x)
}
