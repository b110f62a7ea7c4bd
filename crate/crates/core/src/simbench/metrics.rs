use serde::{Deserialize, Serialize};

use crate::data::{format_real, DataSet};
use crate::error::Result;
use crate::estimators::FittedModel;
use crate::interval::{ext_real, Interval, PredictionSet};

/// A prediction region evaluated at one test point.
pub trait Region {
    fn covers(&self, y: f64) -> bool;
    fn size(&self) -> f64;
}

impl Region for Interval {
    fn covers(&self, y: f64) -> bool {
        self.contains(y)
    }

    fn size(&self) -> f64 {
        self.length()
    }
}

impl Region for PredictionSet {
    fn covers(&self, y: f64) -> bool {
        self.contains(y)
    }

    fn size(&self) -> f64 {
        self.length()
    }
}

/// Metrics of one method on one repetition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub coverage: f64,
    /// Mean length over the test points with finite regions (`inf` if none).
    #[serde(with = "ext_real")]
    pub length: f64,
    pub infinite_fraction: f64,
    pub test_error: f64,
    pub train_error: f64,
    pub wall_time: f64,
}

impl RepOutcome {
    pub fn relative_optimism(&self) -> f64 {
        relative_optimism(self.test_error, self.train_error)
    }
}

pub fn relative_optimism(test_error: f64, train_error: f64) -> f64 {
    if test_error == 0.0 {
        0.0
    } else {
        (test_error - train_error) / test_error
    }
}

/// Coverage, mean finite length and fraction of infinite regions.
pub fn region_metrics<R: Region>(regions: &[R], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(regions.len(), y.len(), "one region per response");
    if regions.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let m = regions.len() as f64;
    let covered = regions.iter().zip(y).filter(|(r, y)| r.covers(**y)).count();
    let finite: Vec<f64> = regions.iter().map(|r| r.size()).filter(|l| l.is_finite()).collect();
    let length = if finite.is_empty() {
        f64::INFINITY
    } else {
        KahanSum::total(finite.iter().copied()) / finite.len() as f64
    };
    (covered as f64 / m, length, (regions.len() - finite.len()) as f64 / m)
}

/// Mean absolute prediction error of `model` on `data`.
pub fn mean_abs_error(model: &FittedModel, data: &DataSet) -> Result<f64> {
    let pred = model.predict_rows(data.x())?;
    let total = KahanSum::total(pred.iter().zip(data.y().iter()).map(|(p, y)| (p - y).abs()));
    Ok(total / data.n() as f64)
}

/// Outcome of `regions` on `test`, with prediction errors from `model`
/// (`train` is the data it was fitted on).
pub fn evaluate<R: Region>(
    regions: &[R],
    test: &DataSet,
    model: Option<(&FittedModel, &DataSet)>,
    wall_time: f64,
) -> Result<RepOutcome> {
    let (coverage, length, infinite_fraction) = region_metrics(regions, test.y().as_slice());
    let (test_error, train_error) = match model {
        Some((m, train)) => (mean_abs_error(m, test)?, mean_abs_error(m, train)?),
        None => (f64::NAN, f64::NAN),
    };
    Ok(RepOutcome {
        coverage,
        length,
        infinite_fraction,
        test_error,
        train_error,
        wall_time,
    })
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }

    pub fn total(values: impl IntoIterator<Item = f64>) -> f64 {
        let mut s = Self::default();
        for v in values {
            s.add(v);
        }
        s.value()
    }
}

/// Mean and standard error (`sd / sqrt(m)`) of the finite entries.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let v: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if v.is_empty() {
        let all_inf = !values.is_empty() && values.iter().all(|v| v.is_infinite());
        return (if all_inf { f64::INFINITY } else { f64::NAN }, f64::NAN);
    }
    let m = v.len() as f64;
    let mean = KahanSum::total(v.iter().copied()) / m;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = KahanSum::total(v.iter().map(|a| (a - mean) * (a - mean))) / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Repetition average for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub experiment: String,
    pub setting: String,
    pub method: String,
    pub hyperparameter: Option<f64>,
    pub reps: usize,
    pub coverage: f64,
    pub coverage_se: f64,
    #[serde(with = "ext_real")]
    pub length: f64,
    pub length_se: f64,
    pub infinite_fraction: f64,
    pub test_error: f64,
    pub test_error_se: f64,
    pub train_error: f64,
    pub train_error_se: f64,
    pub relative_optimism: f64,
    pub relative_optimism_se: f64,
    pub wall_time: f64,
    pub wall_time_se: f64,
}

impl MetricRow {
    pub const CSV_HEADER: [&'static str; 18] = [
        "experiment",
        "setting",
        "method",
        "hyperparameter",
        "reps",
        "coverage",
        "coverage_se",
        "length",
        "length_se",
        "infinite_fraction",
        "test_error",
        "test_error_se",
        "train_error",
        "train_error_se",
        "relative_optimism",
        "relative_optimism_se",
        "wall_time",
        "wall_time_se",
    ];

    /// Averages per-rep outcomes. The relative optimism is computed from the
    /// averaged errors; its standard error from the per-rep values.
    pub fn aggregate(experiment: &str, setting: &str, method: &str, hyperparameter: Option<f64>, outcomes: &[RepOutcome]) -> Self {
        let col = |f: fn(&RepOutcome) -> f64| mean_stderr(&outcomes.iter().map(f).collect::<Vec<_>>());
        let (coverage, coverage_se) = col(|o| o.coverage);
        let (length, length_se) = col(|o| o.length);
        let (infinite_fraction, _) = col(|o| o.infinite_fraction);
        let (test_error, test_error_se) = col(|o| o.test_error);
        let (train_error, train_error_se) = col(|o| o.train_error);
        let (_, relative_optimism_se) = col(|o| o.relative_optimism());
        let (wall_time, wall_time_se) = col(|o| o.wall_time);
        Self {
            experiment: experiment.into(),
            setting: setting.into(),
            method: method.into(),
            hyperparameter,
            reps: outcomes.len(),
            coverage,
            coverage_se,
            length,
            length_se,
            infinite_fraction,
            test_error,
            test_error_se,
            train_error,
            train_error_se,
            relative_optimism: relative_optimism(test_error, train_error),
            relative_optimism_se,
            wall_time,
            wall_time_se,
        }
    }

    pub fn csv_record(&self) -> Vec<String> {
        let r = |v: f64| if v.is_nan() { String::new() } else { format_real(v) };
        vec![
            self.experiment.clone(),
            self.setting.clone(),
            self.method.clone(),
            self.hyperparameter.map(r).unwrap_or_default(),
            self.reps.to_string(),
            r(self.coverage),
            r(self.coverage_se),
            r(self.length),
            r(self.length_se),
            r(self.infinite_fraction),
            r(self.test_error),
            r(self.test_error_se),
            r(self.train_error),
            r(self.train_error_se),
            r(self.relative_optimism),
            r(self.relative_optimism_se),
            r(self.wall_time),
            r(self.wall_time_se),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whole_line_band() {
        let regions = vec![Interval::whole_line(); 4];
        let (cov, len, inf) = region_metrics(&regions, &[1.0, -3.0, 1e9, 0.0]);
        assert_eq!((cov, inf), (1.0, 1.0));
        assert!(len.is_infinite());
    }

    #[test]
    fn degenerate_band_at_truth() {
        let y = [0.5, -2.0, 3.0];
        let regions: Vec<Interval> = y.iter().map(|&v| Interval::point(v)).collect();
        assert_eq!(region_metrics(&regions, &y), (1.0, 0.0, 0.0));
    }

    #[test]
    fn mixed_regions() {
        let regions = vec![
            Interval::new(0.0, 2.0).unwrap(),
            Interval::new(-1.0, 1.0).unwrap(),
            Interval::new(f64::NEG_INFINITY, 0.0).unwrap(),
        ];
        let (cov, len, inf) = region_metrics(&regions, &[1.0, 5.0, -1.0]);
        assert!((cov - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(len, 2.0);
        assert!((inf - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn aggregation_matches_hand_computation() {
        let outcomes: Vec<RepOutcome> = [0.8, 0.9, 1.0]
            .iter()
            .map(|&c| RepOutcome {
                coverage: c,
                length: 2.0 * c,
                test_error: 2.0,
                train_error: c,
                ..Default::default()
            })
            .collect();
        let row = MetricRow::aggregate("x", "A", "m", None, &outcomes);
        assert!((row.coverage - 0.9).abs() < 1e-15);
        // sd of {0.8, 0.9, 1.0} is 0.1
        assert!((row.coverage_se - 0.1 / 3f64.sqrt()).abs() < 1e-12);
        assert!((row.relative_optimism - (2.0 - 0.9) / 2.0).abs() < 1e-12);
        assert!((row.length - 1.8).abs() < 1e-12);
        assert_eq!(row.csv_record().len(), MetricRow::CSV_HEADER.len());
    }

    #[test]
    fn compensated_sum() {
        let v = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(KahanSum::total(v), 2.0);
    }

    #[test]
    fn negative_optimism_is_allowed() {
        assert!(relative_optimism(1.0, 1.5) < 0.0);
    }
}
