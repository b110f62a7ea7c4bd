use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, MetricRow, RepOutcome};
use super::settings::{generate, Setting, SettingSpec, Simulation};
use crate::conformal::{full_conformal, full_conformal_accepts, jackknife_band, split_conformal, ConformalBand, ConformityScore, TrialGrid};
use crate::data::{format_real, split_indices, DataSet, MiscoverageLevel, SplitConfig};
use crate::error::{Error, Result};
use crate::estimators::{fit_path, lasso_lambda_grid, Estimator, FittedModel, ParametricPredictor, RegressionAlgorithm};
use crate::interval::Interval;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    /// Low-dimensional least squares: full, jackknife, split, parametric.
    T1,
    /// High-dimensional least squares.
    T2,
    /// High-dimensional ridge.
    T3,
    /// Split conformal across tuning paths, low dimension.
    F1,
    /// Split conformal across tuning paths, high dimension.
    F2,
    /// Unweighted vs locally weighted split conformal, heteroskedastic sine.
    F3,
    /// Tuning paths on the nonsparse high-dimensional setting.
    F6,
    /// Unweighted vs locally weighted split conformal, homoskedastic sine.
    F7,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::T1,
        Experiment::T2,
        Experiment::T3,
        Experiment::F1,
        Experiment::F2,
        Experiment::F3,
        Experiment::F6,
        Experiment::F7,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::T1 => "T1",
            Experiment::T2 => "T2",
            Experiment::T3 => "T3",
            Experiment::F1 => "F1",
            Experiment::F2 => "F2",
            Experiment::F3 => "F3",
            Experiment::F6 => "F6",
            Experiment::F7 => "F7",
        }
    }

    /// Full-size setting specs (seed 0) for this experiment.
    pub fn settings(self) -> Vec<SettingSpec> {
        let table = |n, d| {
            [Setting::A, Setting::B, Setting::C]
                .into_iter()
                .map(move |s| SettingSpec::new(s, n, d, 10, 1.0, 0))
                .collect()
        };
        let paths = |settings: &[Setting], d: usize| {
            settings
                .iter()
                .map(|&s| {
                    let sparsity = if s == Setting::D { 100 } else { 5 };
                    SettingSpec::new(s, 200, d, sparsity, 8.0, 0)
                })
                .collect()
        };
        match self {
            Experiment::T1 => table(100, 10),
            Experiment::T2 | Experiment::T3 => table(500, 490),
            Experiment::F1 => paths(&[Setting::A, Setting::B, Setting::C], 20),
            Experiment::F2 => paths(&[Setting::A, Setting::B, Setting::C], 2000),
            Experiment::F6 => paths(&[Setting::D], 2000),
            Experiment::F3 => vec![SettingSpec::sine(Setting::SineHetero, 1000, 0).with_test_size(5000)],
            Experiment::F7 => vec![SettingSpec::sine(Setting::SineHomo, 1000, 0).with_test_size(5000)],
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownExperiment(s.into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    /// Multiplies `n`, `d`, the sparsity and the test size (each kept >= its
    /// minimum); 1 is full size.
    pub scale: f64,
    /// Record wall times. Off by default so that output files are
    /// reproducible byte for byte.
    pub timing: bool,
    pub grid_count: usize,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, reps: usize, seed: u64) -> Self {
        Self {
            experiment,
            reps,
            seed,
            alpha: 0.1,
            scale: 1.0,
            timing: false,
            grid_count: TrialGrid::DEFAULT_COUNT,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParameter("need at least one repetition".into()));
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::InvalidParameter(format!("scale must lie in (0, 1], got {}", self.scale)));
        }
        MiscoverageLevel::new(self.alpha)?;
        Ok(())
    }

    /// Setting specs after scaling (seed 0; each repetition sets its own).
    pub fn settings(&self) -> Vec<SettingSpec> {
        let s = self.scale;
        let shrink = |v: usize, min: usize| ((v as f64 * s).round() as usize).max(min);
        self.experiment
            .settings()
            .into_iter()
            .map(|mut spec| {
                if !spec.setting.is_sine() {
                    spec.d = shrink(spec.d, 4);
                    spec.sparsity = shrink(spec.sparsity, 1).min(spec.d);
                }
                spec.n = shrink(spec.n, 20);
                if self.experiment == Experiment::T2 || self.experiment == Experiment::T1 {
                    // least squares needs room for a residual variance
                    spec.n = spec.n.max(spec.d + 3);
                }
                spec.n_test = shrink(spec.n_test, 20);
                spec
            })
            .collect()
    }
}

/// One method's outcome on one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub setting: String,
    pub method: String,
    pub hyperparameter: Option<f64>,
    pub outcome: RepOutcome,
}

/// One point of long-format figure data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigurePoint {
    pub panel: String,
    pub curve: String,
    pub x: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: Experiment,
    pub master_seed: u64,
    pub rep_seeds: Vec<u64>,
    pub reps: usize,
    pub alpha: f64,
    pub scale: f64,
    pub settings: Vec<SettingSpec>,
    pub crate_version: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricRow>,
    pub records: Vec<RepRecord>,
    pub figure: Vec<FigurePoint>,
    pub manifest: Manifest,
}

impl ExperimentOutput {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(MetricRow::CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.csv_record())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_figure_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["panel", "curve", "x", "value"])?;
        for p in &self.figure {
            w.write_record([p.panel.clone(), p.curve.clone(), format_real(p.x), format_real(p.value)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn manifest_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.manifest)?)
    }
}

pub fn rep_seed(master: u64, rep: usize) -> u64 {
    rng::derive_seed(master, rep as u64)
}

/// Runs `cfg.reps` independent repetitions (in parallel) and averages them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let alpha = MiscoverageLevel::new(cfg.alpha)?;
    let settings = cfg.settings();
    let rep_seeds: Vec<u64> = (0..cfg.reps).map(|r| rep_seed(cfg.seed, r)).collect();
    let pilot_seed = rng::derive_seed(cfg.seed, u64::MAX);
    let paths: Vec<Vec<PathFamily>> = match cfg.experiment {
        Experiment::F1 | Experiment::F2 | Experiment::F6 => settings
            .iter()
            .map(|spec| tuning_paths(&SettingSpec { seed: pilot_seed, ..spec.clone() }))
            .collect::<Result<_>>()?,
        _ => vec![Vec::new(); settings.len()],
    };

    let per_rep: Vec<Vec<(RepRecord, Vec<SineBins>)>> = rep_seeds
        .par_iter()
        .enumerate()
        .map(|(rep, &seed)| {
            settings
                .iter()
                .zip(&paths)
                .enumerate()
                .map(|(k, (spec, families))| {
                    let spec = SettingSpec {
                        seed: rng::derive_seed(seed, k as u64),
                        ..spec.clone()
                    };
                    let split = SplitConfig::with_seed(rng::derive_seed(seed, 1000 + k as u64));
                    let sim = generate(&spec)?;
                    let (outcomes, bins) = match cfg.experiment {
                        Experiment::T1 | Experiment::T2 => {
                            (table_rep(&sim, &LinearFamily::Ols, alpha, &split, cfg.grid_count, cfg.timing)?, Vec::new())
                        }
                        Experiment::T3 => {
                            let lambda = TABLE_RIDGE_PENALTY / spec.n as f64;
                            (table_rep(&sim, &LinearFamily::Ridge(lambda), alpha, &split, cfg.grid_count, cfg.timing)?, Vec::new())
                        }
                        Experiment::F1 | Experiment::F2 | Experiment::F6 => {
                            (path_rep(&sim, families, alpha, &split, cfg.timing)?, Vec::new())
                        }
                        Experiment::F3 | Experiment::F7 => {
                            let rep = sine_rep(&sim, alpha, &split, SINE_BINS, cfg.timing)?;
                            (rep.outcomes, rep.bins)
                        }
                    };
                    Ok(outcomes
                        .into_iter()
                        .map(|(method, hyperparameter, outcome)| {
                            (
                                RepRecord {
                                    rep,
                                    setting: spec.setting.as_str().into(),
                                    method,
                                    hyperparameter,
                                    outcome,
                                },
                                bins.clone(),
                            )
                        })
                        .collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()
                .map(|v| v.into_iter().flatten().collect())
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::new();
    let mut bins_by_rep: Vec<Vec<SineBins>> = Vec::new();
    for rep in per_rep {
        if let Some((_, bins)) = rep.first() {
            bins_by_rep.push(bins.clone());
        }
        records.extend(rep.into_iter().map(|(r, _)| r));
    }

    let rows = aggregate_records(cfg.experiment.as_str(), &records);
    let figure = match cfg.experiment {
        Experiment::F3 | Experiment::F7 => sine_figure(&bins_by_rep),
        Experiment::F1 | Experiment::F2 | Experiment::F6 => path_figure(&rows),
        _ => Vec::new(),
    };
    Ok(ExperimentOutput {
        rows,
        records,
        figure,
        manifest: Manifest {
            experiment: cfg.experiment,
            master_seed: cfg.seed,
            rep_seeds,
            reps: cfg.reps,
            alpha: cfg.alpha,
            scale: cfg.scale,
            settings,
            crate_version: env!("CARGO_PKG_VERSION").into(),
        },
    })
}

/// Groups records by (setting, method, hyperparameter) in first-seen order.
pub fn aggregate_records(experiment: &str, records: &[RepRecord]) -> Vec<MetricRow> {
    let mut keys: Vec<(String, String, Option<u64>)> = Vec::new();
    for r in records {
        let key = (r.setting.clone(), r.method.clone(), r.hyperparameter.map(f64::to_bits));
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(setting, method, hp)| {
            let outcomes: Vec<RepOutcome> = records
                .iter()
                .filter(|r| r.setting == setting && r.method == method && r.hyperparameter.map(f64::to_bits) == hp)
                .map(|r| r.outcome)
                .collect();
            MetricRow::aggregate(experiment, &setting, &method, hp.map(f64::from_bits), &outcomes)
        })
        .collect()
}

/// Ridge penalty on the residual sum of squares scale used by the ridge
/// table; divided by `n` for the `(1/2n)` objective.
pub const TABLE_RIDGE_PENALTY: f64 = 10.0;
const SINE_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum LinearFamily {
    Ols,
    Ridge(f64),
}

impl LinearFamily {
    fn algorithm(&self) -> RegressionAlgorithm {
        match self {
            LinearFamily::Ols => RegressionAlgorithm::ols(),
            LinearFamily::Ridge(l) => RegressionAlgorithm::ridge(*l),
        }
    }

    fn parametric(&self, data: &DataSet) -> Result<ParametricPredictor> {
        match self {
            LinearFamily::Ols => ParametricPredictor::ols(data),
            LinearFamily::Ridge(l) => ParametricPredictor::ridge(data, *l),
        }
    }
}

type Outcomes = Vec<(String, Option<f64>, RepOutcome)>;

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

fn band_intervals(band: &ConformalBand, test: &DataSet) -> Result<Vec<Interval>> {
    (0..test.n()).map(|i| band.evaluate(&test.row(i))).collect()
}

/// Full, jackknife, split and parametric intervals for one simulated data set.
pub fn table_rep(
    sim: &Simulation,
    family: &LinearFamily,
    alpha: MiscoverageLevel,
    split: &SplitConfig,
    grid_count: usize,
    timing: bool,
) -> Result<Outcomes> {
    let alg = family.algorithm();
    let (train, test) = (&sim.train, &sim.test);
    let score = ConformityScore::absolute();
    let time = |t: f64| if timing { t } else { f64::NAN };
    let full_model = alg.fit(train)?;
    let mut out = Vec::new();

    let grid = TrialGrid::around(train.y().as_slice(), grid_count)?;
    let (sets, t) = timed(|| {
        (0..test.n())
            .map(|i| full_conformal(&alg, train, &test.row(i), alpha, &grid, &score))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut full = evaluate(&sets, test, Some((&full_model, train)), time(t))?;
    // coverage from exact membership; the grid only resolves the length
    let covered = (0..test.n())
        .map(|i| full_conformal_accepts(&alg, train, &test.row(i), test.y()[i], alpha, &score))
        .collect::<Result<Vec<_>>>()?;
    full.coverage = covered.iter().filter(|c| **c).count() as f64 / test.n() as f64;
    out.push(("conformal".into(), None, full));

    let (band, t) = timed(|| jackknife_band(&alg, train, alpha, &score))?;
    let iv = band_intervals(&band, test)?;
    out.push(("jackknife".into(), None, evaluate(&iv, test, Some((&full_model, train)), time(t))?));

    // least squares on half the sample is undefined once d >= n / 2; the
    // split row is then left out
    match timed(|| split_conformal(&alg, train, alpha, split, &score)) {
        Ok((band, t)) => {
            let iv = band_intervals(&band, test)?;
            let fit_rows = train.subset(band.folds()[0].fit_indices());
            out.push((
                "split".into(),
                None,
                evaluate(&iv, test, Some((band.folds()[0].mean(), &fit_rows)), time(t))?,
            ));
        }
        Err(Error::RankDeficient(_)) if *family == LinearFamily::Ols => {}
        Err(e) => return Err(e),
    }

    let (iv, t) = timed(|| {
        let p = family.parametric(train)?;
        (0..test.n()).map(|i| p.interval(&test.row(i), alpha)).collect::<Result<Vec<_>>>()
    })?;
    out.push(("parametric".into(), None, evaluate(&iv, test, Some((&full_model, train)), time(t))?));
    Ok(out)
}

/// A family of estimators over a fixed tuning grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFamily {
    pub name: String,
    pub algorithm: RegressionAlgorithm,
    pub grid: Vec<f64>,
}

const PATH_LENGTH: usize = 20;
const ELASTIC_NET_MIX: f64 = 0.5;

/// Stepwise, lasso and elastic net tuning grids, fixed from a pilot draw so
/// that every repetition uses the same values.
pub fn tuning_paths(pilot: &SettingSpec) -> Result<Vec<PathFamily>> {
    let sim = generate(pilot)?;
    let (fit_idx, _) = split_indices(sim.train.n(), &SplitConfig::with_seed(pilot.seed))?;
    let fit_rows = sim.train.subset(&fit_idx);
    let max_steps = pilot.d.min(fit_rows.n().saturating_sub(2)).min(PATH_LENGTH + 10).max(1);
    let lasso = lasso_lambda_grid(&fit_rows, PATH_LENGTH, 1e-2);
    Ok(vec![
        PathFamily {
            name: "stepwise".into(),
            algorithm: RegressionAlgorithm::stepwise(1),
            grid: (1..=max_steps).map(|k| k as f64).collect(),
        },
        PathFamily {
            name: "lasso".into(),
            algorithm: RegressionAlgorithm::lasso(lasso[0]),
            grid: lasso.clone(),
        },
        PathFamily {
            name: "elastic_net".into(),
            algorithm: RegressionAlgorithm::elastic_net(lasso[0] / ELASTIC_NET_MIX, ELASTIC_NET_MIX),
            grid: lasso.iter().map(|l| l / ELASTIC_NET_MIX).collect(),
        },
    ])
}

/// An already fitted model posing as an estimator.
struct Prefit(FittedModel);

impl Estimator for Prefit {
    fn fit(&self, _: &DataSet) -> Result<FittedModel> {
        Ok(self.0.clone())
    }

    fn name(&self) -> String {
        self.0.meta().kind.clone()
    }
}

/// Split conformal along each tuning path.
pub fn path_rep(
    sim: &Simulation,
    families: &[PathFamily],
    alpha: MiscoverageLevel,
    split: &SplitConfig,
    timing: bool,
) -> Result<Outcomes> {
    let (fit_idx, _) = split_indices(sim.train.n(), split)?;
    let fit_rows = sim.train.subset(&fit_idx);
    let score = ConformityScore::absolute();
    let mut out = Vec::new();
    for fam in families {
        let (models, t) = timed(|| fit_path(&fam.algorithm, &fit_rows, &fam.grid))?;
        let t_each = t / fam.grid.len().max(1) as f64;
        for (value, model) in fam.grid.iter().zip(models) {
            let (band, t) = timed(|| split_conformal(&Prefit(model.clone()), &sim.train, alpha, split, &score))?;
            let iv = band_intervals(&band, &sim.test)?;
            let wall = if timing { t + t_each } else { f64::NAN };
            out.push((
                fam.name.clone(),
                Some(*value),
                evaluate(&iv, &sim.test, Some((&model, &fit_rows)), wall)?,
            ));
        }
    }
    Ok(out)
}

fn path_figure(rows: &[MetricRow]) -> Vec<FigurePoint> {
    let mut out = Vec::new();
    for row in rows {
        for (metric, value) in [("coverage", row.coverage), ("length", row.length), ("test_error", row.test_error)] {
            out.push(FigurePoint {
                panel: format!("{}_{}", row.setting, metric),
                curve: row.method.clone(),
                x: row.relative_optimism,
                value,
            });
        }
    }
    out
}

/// Local coverage and length in equal-width bins of the (univariate) feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SineBins {
    pub method: String,
    pub centers: Vec<f64>,
    pub coverage: Vec<f64>,
    pub length: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SineRep {
    pub outcomes: Outcomes,
    pub bins: Vec<SineBins>,
}

/// Additive spline with cross-validated degrees of freedom, used for both the
/// mean and the spread in the sine experiments.
pub fn sine_smoother(seed: u64) -> RegressionAlgorithm {
    RegressionAlgorithm::bspline_additive(5).with_cv(5, vec![3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0], seed)
}

/// Unweighted and locally weighted split conformal on a sine simulation.
pub fn sine_rep(sim: &Simulation, alpha: MiscoverageLevel, split: &SplitConfig, bins: usize, timing: bool) -> Result<SineRep> {
    let alg = sine_smoother(split.seed);
    let scores = [
        ("split", ConformityScore::absolute()),
        ("split_weighted", ConformityScore::locally_weighted(sine_smoother(split.seed ^ 1))),
    ];
    let pi2 = 2.0 * std::f64::consts::PI;
    let width = pi2 / bins as f64;
    let bin_of = |x: f64| ((x / width).floor().max(0.0) as usize).min(bins - 1);
    let mut out = SineRep {
        outcomes: Vec::new(),
        bins: Vec::new(),
    };
    for (name, score) in scores {
        let (band, t) = timed(|| split_conformal(&alg, &sim.train, alpha, split, &score))?;
        let iv = band_intervals(&band, &sim.test)?;
        let fit_rows = sim.train.subset(band.folds()[0].fit_indices());
        let wall = if timing { t } else { f64::NAN };
        out.outcomes.push((
            name.into(),
            None,
            evaluate(&iv, &sim.test, Some((band.folds()[0].mean(), &fit_rows)), wall)?,
        ));
        let mut hits = vec![0.0; bins];
        let mut len = vec![0.0; bins];
        let mut count = vec![0usize; bins];
        for (i, v) in iv.iter().enumerate() {
            let b = bin_of(sim.test.x()[(i, 0)]);
            count[b] += 1;
            len[b] += v.length();
            if v.contains(sim.test.y()[i]) {
                hits[b] += 1.0;
            }
        }
        let avg = |s: Vec<f64>| -> Vec<f64> {
            s.iter()
                .zip(&count)
                .map(|(v, &c)| if c == 0 { f64::NAN } else { v / c as f64 })
                .collect()
        };
        out.bins.push(SineBins {
            method: name.into(),
            centers: (0..bins).map(|b| (b as f64 + 0.5) * width).collect(),
            coverage: avg(hits),
            length: avg(len),
        });
    }
    Ok(out)
}

fn sine_figure(by_rep: &[Vec<SineBins>]) -> Vec<FigurePoint> {
    let Some(first) = by_rep.first() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for (m, template) in first.iter().enumerate() {
        for (panel, pick) in [("coverage", 0usize), ("length", 1)] {
            for (b, &x) in template.centers.iter().enumerate() {
                let vals: Vec<f64> = by_rep
                    .iter()
                    .map(|rep| if pick == 0 { rep[m].coverage[b] } else { rep[m].length[b] })
                    .filter(|v| v.is_finite())
                    .collect();
                let value = if vals.is_empty() {
                    f64::NAN
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                };
                out.push(FigurePoint {
                    panel: panel.into(),
                    curve: template.method.clone(),
                    x,
                    value,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(e: Experiment, reps: usize, scale: f64) -> ExperimentConfig {
        ExperimentConfig {
            grid_count: 60,
            ..ExperimentConfig::new(e, reps, 42).with_scale(scale)
        }
    }

    fn csv_bytes(out: &ExperimentOutput) -> Vec<u8> {
        let mut buf = Vec::new();
        out.write_csv(&mut buf).unwrap();
        buf
    }

    #[test]
    fn experiment_ids() {
        for e in Experiment::ALL {
            assert_eq!(e.as_str().parse::<Experiment>().unwrap(), e);
        }
        assert!(matches!("T9".parse::<Experiment>(), Err(Error::UnknownExperiment(_))));
    }

    #[test]
    fn table_run_is_reproducible() {
        let cfg = small(Experiment::T1, 1, 0.5);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(csv_bytes(&a), csv_bytes(&b));
        assert_eq!(a.rows.len(), 12);
        let methods: Vec<&str> = a.rows.iter().take(4).map(|r| r.method.as_str()).collect();
        assert_eq!(methods, ["conformal", "jackknife", "split", "parametric"]);
        assert_eq!(a.manifest.rep_seeds, vec![rep_seed(42, 0)]);
    }

    #[test]
    fn reported_coverage_is_mean_of_reps() {
        let out = run_experiment(&small(Experiment::T1, 3, 0.5)).unwrap();
        for row in &out.rows {
            let covs: Vec<f64> = out
                .records
                .iter()
                .filter(|r| r.setting == row.setting && r.method == row.method)
                .map(|r| r.outcome.coverage)
                .collect();
            assert_eq!(covs.len(), 3);
            let mean = covs.iter().sum::<f64>() / 3.0;
            assert!((row.coverage - mean).abs() < 1e-12);
            let sd = (covs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 2.0).sqrt();
            assert!((row.coverage_se - sd / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn path_experiment_shape() {
        let cfg = small(Experiment::F1, 1, 0.5);
        let out = run_experiment(&cfg).unwrap();
        let lasso: Vec<&MetricRow> = out.rows.iter().filter(|r| r.method == "lasso" && r.setting == "A").collect();
        assert_eq!(lasso.len(), PATH_LENGTH);
        assert!(lasso.iter().all(|r| r.hyperparameter.is_some()));
        assert!(!out.figure.is_empty());
    }

    #[test]
    fn sine_experiment_reports_both_bands() {
        let out = run_experiment(&small(Experiment::F3, 1, 0.3)).unwrap();
        let names: Vec<&str> = out.rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(names, ["split", "split_weighted"]);
        assert_eq!(out.figure.len(), 2 * 2 * SINE_BINS);
        let json = out.manifest_json().unwrap();
        assert!(json.contains("\"master_seed\": 42"));
    }

    #[test]
    fn scaling_keeps_least_squares_feasible() {
        let cfg = small(Experiment::T2, 1, 0.1);
        for s in cfg.settings() {
            assert!(s.n > s.d + 1);
            assert!(s.sparsity <= s.d);
        }
        assert!(small(Experiment::T1, 0, 1.0).validate().is_err());
    }
}
