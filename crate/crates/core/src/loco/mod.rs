//! Leave-one-covariate-out (LOCO) variable importance.
//!
//! The excess error of dropping covariate `j` at `(x, y)` is
//! `|y - mu_{-j}(x)| - |y - mu(x)|`, where `mu_{-j}` is refitted without
//! column `j` using the same algorithm (including its tuning procedure).

mod stats;

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::conformal::{roo_split_conformal, ConformalBand, ConformityScore};
use crate::data::{format_real, split_indices, DataSet, MiscoverageLevel, SplitConfig};
use crate::error::{Error, Result};
use crate::estimators::{Estimator, FittedModel, RegressionAlgorithm};
use crate::interval::Interval;

pub use stats::{
    average_ranks, sign_test, signed_rank_null, wilcoxon_interval, wilcoxon_signed_rank, z_inference, SignTest,
    WilcoxonTest, ZInference, WILCOXON_EXACT_MAX,
};

/// `{|y - mu_minus| - |y - mu| : y in c}` as an interval. Unbounded `c`
/// gives the whole line (flagged by [`ExcessErrorInterval::unbounded`]).
pub fn excess_error_image(c: &Interval, mu: f64, mu_minus: f64) -> Interval {
    if c.is_empty() {
        return Interval::empty();
    }
    if !c.is_finite() {
        return Interval::whole_line();
    }
    let f = |y: f64| (y - mu_minus).abs() - (y - mu).abs();
    let mut lo = f(c.lo).min(f(c.hi));
    let mut hi = f(c.lo).max(f(c.hi));
    for kink in [mu, mu_minus] {
        if c.contains(kink) {
            lo = lo.min(f(kink));
            hi = hi.max(f(kink));
        }
    }
    // round outward so that excess errors evaluated in a different order
    // still land inside
    if mu == mu_minus {
        return Interval::point(0.0);
    }
    let slack = 4.0 * f64::EPSILON * [c.lo, c.hi, mu, mu_minus].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Interval {
        lo: lo - slack,
        hi: hi + slack,
    }
}

/// Where an excess-error interval was evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    /// Training row index.
    Sample(usize),
    Point(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExcessErrorInterval {
    /// Zero-based covariate index.
    pub j: usize,
    pub at: Location,
    pub w: Interval,
    /// The underlying prediction interval was unbounded.
    pub unbounded: bool,
}

fn drop_coordinate(x: &[f64], j: usize) -> Vec<f64> {
    x.iter()
        .enumerate()
        .filter(|(k, _)| *k != j)
        .map(|(_, v)| *v)
        .collect()
}

/// Refit without column `j`; with a single column this is the mean of `y`.
fn fit_without(alg: &dyn Estimator, data: &DataSet, j: usize) -> Result<FittedModel> {
    if data.d() == 1 {
        return Ok(FittedModel::constant(0, data.y().mean(), "intercept_only"));
    }
    alg.fit(&data.without_column(j)?)
}

fn check_columns(columns: &[usize], d: usize) -> Result<()> {
    if columns.is_empty() {
        return Err(Error::InvalidParameter("no covariates to test".into()));
    }
    if let Some(&j) = columns.iter().find(|&&j| j >= d) {
        return Err(Error::InvalidParameter(format!(
            "covariate {j} out of range for {d} features"
        )));
    }
    Ok(())
}

/// Per-point LOCO intervals built on a rank-one-out split conformal band.
#[derive(Debug, Clone)]
pub struct LocoLocal {
    band: ConformalBand,
    columns: Vec<usize>,
    /// `reduced[c][k]`: fold `k` model without `columns[c]`.
    reduced: Vec<Vec<FittedModel>>,
    intervals: Vec<ExcessErrorInterval>,
}

impl LocoLocal {
    pub fn band(&self) -> &ConformalBand {
        &self.band
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    /// In-sample intervals, row-major over (row, covariate).
    pub fn intervals(&self) -> &[ExcessErrorInterval] {
        &self.intervals
    }

    /// Intervals at a new point, from the first fold's models and its
    /// relaxed halfwidth.
    pub fn at_point(&self, x: &[f64]) -> Result<Vec<ExcessErrorInterval>> {
        let c = self.band.evaluate(x)?;
        let mu = self.band.folds()[0].mean().predict(x)?;
        self.columns
            .iter()
            .zip(&self.reduced)
            .map(|(&j, models)| {
                let mu_minus = models[0].predict(&drop_coordinate(x, j))?;
                Ok(ExcessErrorInterval {
                    j,
                    at: Location::Point(x.to_vec()),
                    w: excess_error_image(&c, mu, mu_minus),
                    unbounded: !c.is_finite(),
                })
            })
            .collect()
    }

    /// Realized excess errors at `(x, y)` with the first fold's models, one
    /// per tested covariate.
    pub fn excess_errors(&self, x: &[f64], y: f64) -> Result<Vec<f64>> {
        let mu = self.band.folds()[0].mean().predict(x)?;
        self.columns
            .iter()
            .zip(&self.reduced)
            .map(|(&j, models)| Ok((y - models[0].predict(&drop_coordinate(x, j))?).abs() - (y - mu).abs()))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["row", "feature", "lo", "hi", "unbounded"])?;
        for iv in &self.intervals {
            let row = match &iv.at {
                Location::Sample(i) => i.to_string(),
                Location::Point(_) => String::new(),
            };
            w.write_record([
                row,
                format!("x{}", iv.j + 1),
                format_real(iv.w.lo),
                format_real(iv.w.hi),
                iv.unbounded.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// LOCO intervals `W_j(X_i)` for every training row and every covariate in
/// `columns` (all covariates when `None`).
pub fn loco_local(
    alg: &dyn Estimator,
    data: &DataSet,
    alpha: MiscoverageLevel,
    cfg: &SplitConfig,
    columns: Option<&[usize]>,
) -> Result<LocoLocal> {
    let columns: Vec<usize> = match columns {
        Some(c) => c.to_vec(),
        None => (0..data.d()).collect(),
    };
    check_columns(&columns, data.d())?;
    let band = roo_split_conformal(alg, data, alpha, cfg, &ConformityScore::absolute())?;
    let reduced = columns
        .par_iter()
        .map(|&j| {
            band.folds()
                .iter()
                .map(|fold| fit_without(alg, &data.subset(fold.fit_indices()), j))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let points = band.in_sample().expect("rank-one-out band has in-sample points");
    let mut intervals = Vec::with_capacity(data.n() * columns.len());
    for (i, p) in points.iter().enumerate() {
        let x = data.row(i);
        let mu = band.folds()[p.fold].mean().predict(&x)?;
        for (&j, models) in columns.iter().zip(&reduced) {
            let mu_minus = models[p.fold].predict(&drop_coordinate(&x, j))?;
            intervals.push(ExcessErrorInterval {
                j,
                at: Location::Sample(i),
                w: excess_error_image(&p.interval, mu, mu_minus),
                unbounded: !p.interval.is_finite(),
            });
        }
    }
    Ok(LocoLocal {
        band,
        columns,
        reduced,
        intervals,
    })
}

/// Which covariates to test globally.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    Fixed(Vec<usize>),
    /// Active set of a lasso tuned by `folds`-fold CV, fitted on the first
    /// half of the split only.
    LassoCv { folds: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocoRow {
    pub j: usize,
    pub feature: String,
    pub n_test: usize,
    pub z: ZInference,
    pub sign: SignTest,
    pub wilcoxon: WilcoxonTest,
    /// Signed-rank interval for the median excess error.
    pub median_interval: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocoReport {
    pub alpha: f64,
    /// `alpha / |S|`, the level each interval and test is computed at.
    pub adjusted_alpha: f64,
    pub tested: Vec<usize>,
    pub split_seed: u64,
    pub rows: Vec<LocoRow>,
}

impl LocoReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "feature",
            "n_test",
            "theta_hat",
            "sd",
            "z_lo",
            "z_hi",
            "z_p_one_sided",
            "z_p_two_sided",
            "sign_positive",
            "sign_negative",
            "sign_zeros",
            "sign_p_one_sided",
            "sign_p_two_sided",
            "wilcoxon_statistic",
            "wilcoxon_p_one_sided",
            "wilcoxon_p_two_sided",
            "median_lo",
            "median_hi",
            "adjusted_alpha",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.feature.clone(),
                r.n_test.to_string(),
                format_real(r.z.mean),
                format_real(r.z.sd),
                format_real(r.z.interval.lo),
                format_real(r.z.interval.hi),
                format_real(r.z.p_greater),
                format_real(r.z.p_two_sided),
                r.sign.positives.to_string(),
                r.sign.negatives.to_string(),
                r.sign.zeros.to_string(),
                format_real(r.sign.p_greater),
                format_real(r.sign.p_two_sided),
                format_real(r.wilcoxon.statistic),
                format_real(r.wilcoxon.p_greater),
                format_real(r.wilcoxon.p_two_sided),
                format_real(r.median_interval.lo),
                format_real(r.median_interval.hi),
                format_real(self.adjusted_alpha),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Global LOCO inference on a single split: models are fitted on the first
/// half, excess errors measured on the second, and every interval and test
/// runs at the Bonferroni level `alpha / |S|`.
pub fn loco_global(
    alg: &dyn Estimator,
    data: &DataSet,
    alpha: MiscoverageLevel,
    cfg: &SplitConfig,
    selection: &Selection,
) -> Result<LocoReport> {
    let (fit_idx, test_idx) = split_indices(data.n(), cfg)?;
    let train = data.subset(&fit_idx);
    let test = data.subset(&test_idx);

    let tested = match selection {
        Selection::Fixed(cols) => {
            check_columns(cols, data.d())?;
            cols.clone()
        }
        Selection::LassoCv { folds, seed } => {
            let model = RegressionAlgorithm::lasso_cv(&train, *folds, *seed).fit(&train)?;
            model.meta().selected.clone().unwrap_or_default()
        }
    };
    let level = if tested.is_empty() { alpha } else { alpha.bonferroni(tested.len()) };

    let full = alg.fit(&train)?;
    let full_pred = full.predict_rows(test.x())?;
    let rows = tested
        .par_iter()
        .map(|&j| {
            let reduced = fit_without(alg, &train, j)?;
            let delta: Vec<f64> = (0..test.n())
                .map(|i| {
                    let y = test.y()[i];
                    let mu_minus = reduced.predict(&drop_coordinate(&test.row(i), j))?;
                    Ok((y - mu_minus).abs() - (y - full_pred[i]).abs())
                })
                .collect::<Result<_>>()?;
            Ok(LocoRow {
                j,
                feature: format!("x{}", j + 1),
                n_test: delta.len(),
                z: z_inference(&delta, level.alpha()),
                sign: sign_test(&delta),
                wilcoxon: wilcoxon_signed_rank(&delta),
                median_interval: wilcoxon_interval(&delta, level.alpha()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LocoReport {
        alpha: alpha.alpha(),
        adjusted_alpha: level.alpha(),
        tested,
        split_seed: cfg.seed,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn image_by_hand() {
        let c = Interval::new(0.0, 2.0).unwrap();
        let w = excess_error_image(&c, 1.0, 3.0);
        assert!(w.lo.abs() < 1e-14 && (w.hi - 2.0).abs() < 1e-14, "{w:?}");
        assert_eq!(excess_error_image(&c, 1.0, 1.0), Interval::point(0.0));
        assert_eq!(excess_error_image(&Interval::whole_line(), 1.0, 3.0), Interval::whole_line());
    }

    #[test]
    fn image_matches_dense_grid() {
        let mut r = rng::seeded(12);
        for _ in 0..300 {
            let a = rng::std_normal(&mut r) * 2.0;
            let b = a + rng::std_normal(&mut r).abs() * 3.0;
            let mu = rng::std_normal(&mut r) * 2.0;
            let mu_minus = rng::std_normal(&mut r) * 2.0;
            let c = Interval::new(a, b).unwrap();
            let exact = excess_error_image(&c, mu, mu_minus);
            let steps = 10_000;
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for k in 0..=steps {
                let y = a + (b - a) * k as f64 / steps as f64;
                let v = (y - mu_minus).abs() - (y - mu).abs();
                lo = lo.min(v);
                hi = hi.max(v);
            }
            // the exact image contains the grid image and exceeds it by at most
            // the Lipschitz constant (2) times half a grid step
            let tol = 2.0 * (b - a) / steps as f64;
            assert!(exact.lo <= lo + 1e-12 && exact.hi >= hi - 1e-12);
            assert!(lo - exact.lo <= tol && exact.hi - hi <= tol);
        }
    }

    fn data_with_noise_feature(n: usize, seed: u64) -> DataSet {
        let mut r = rng::seeded(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng::std_normal(&mut r), rng::std_normal(&mut r)])
            .collect();
        let y: Vec<f64> = rows.iter().map(|x| 3.0 * x[0] + rng::std_normal(&mut r)).collect();
        DataSet::from_rows(&rows, &y).unwrap()
    }

    #[test]
    fn local_intervals_cover_all_rows_and_columns() {
        let data = data_with_noise_feature(60, 2);
        let loco = loco_local(&RegressionAlgorithm::ols(), &data, MiscoverageLevel::new(0.1).unwrap(), &SplitConfig::with_seed(4), None)
            .unwrap();
        assert_eq!(loco.intervals().len(), 120);
        let above: usize = loco.intervals().iter().filter(|iv| iv.j == 0 && iv.w.lo > 0.0).count();
        assert!(above > 10, "signal column rarely important: {above}");
        let mut buf = Vec::new();
        loco.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 121);
    }

    #[test]
    fn unused_column_gives_zero_width() {
        // the zero estimator ignores every column
        let data = data_with_noise_feature(20, 3);
        let loco = loco_local(&RegressionAlgorithm::zero(), &data, MiscoverageLevel::new(0.2).unwrap(), &SplitConfig::with_seed(1), None)
            .unwrap();
        assert!(loco.intervals().iter().all(|iv| iv.w == Interval::point(0.0)));
    }

    #[test]
    fn global_report_finds_signal() {
        let data = data_with_noise_feature(200, 5);
        let alpha = MiscoverageLevel::new(0.1).unwrap();
        let report = loco_global(&RegressionAlgorithm::ols(), &data, alpha, &SplitConfig::with_seed(2), &Selection::Fixed(vec![0, 1]))
            .unwrap();
        assert_eq!(report.adjusted_alpha, 0.05);
        assert!(report.rows[0].median_interval.lo > 0.0);
        assert!(report.rows[0].wilcoxon.p_greater < 1e-6);
        assert!(report.rows[1].median_interval.contains(0.0));
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
        assert!(report.to_json().unwrap().contains("\"adjusted_alpha\": 0.05"));
    }

    #[test]
    fn single_feature_drop_uses_intercept_model() {
        let mut r = rng::seeded(8);
        let rows: Vec<Vec<f64>> = (0..80).map(|_| vec![rng::std_normal(&mut r)]).collect();
        let y: Vec<f64> = (0..80).map(|_| rng::std_normal(&mut r)).collect();
        let data = DataSet::from_rows(&rows, &y).unwrap();
        let report = loco_global(&RegressionAlgorithm::ols(), &data, MiscoverageLevel::new(0.1).unwrap(), &SplitConfig::with_seed(3), &Selection::Fixed(vec![0]))
            .unwrap();
        assert!(report.rows[0].median_interval.contains(0.0));
    }

    #[test]
    fn deterministic_reports() {
        let data = data_with_noise_feature(80, 9);
        let sel = Selection::LassoCv { folds: 5, seed: 3 };
        let alpha = MiscoverageLevel::new(0.1).unwrap();
        let cfg = SplitConfig::with_seed(6);
        let alg = RegressionAlgorithm::ols();
        let a = loco_global(&alg, &data, alpha, &cfg, &sel).unwrap();
        let b = loco_global(&alg, &data, alpha, &cfg, &sel).unwrap();
        assert_eq!(a, b);
        assert!(a.tested.contains(&0));
    }
}
