use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use conformal_core::conformal::{
    self as cf, full_conformal, ConformalBand, ConformityScore, MultiSplitBand, TrialGrid,
};
use conformal_core::data::{DataSet, MiscoverageLevel, SplitConfig};
use conformal_core::error::Error;
use conformal_core::estimators::{Estimator as _, FittedModel, RegressionAlgorithm};
use conformal_core::interval::{Interval, PredictionSet};
use conformal_core::loco::{self, LocoReport, Selection};
use conformal_core::rng::derive_seed;
use conformal_core::simbench::{self, Experiment, ExperimentConfig, Setting, SettingSpec};

fn py_err(e: Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for conformal_core::error::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn dataset(x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<DataSet> {
    DataSet::from_rows(&x, &y).py()
}

fn level(alpha: f64) -> PyResult<MiscoverageLevel> {
    MiscoverageLevel::new(alpha).py()
}

#[pyclass(name = "Interval", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyInterval {
    #[pyo3(get)]
    lo: f64,
    #[pyo3(get)]
    hi: f64,
}

impl From<Interval> for PyInterval {
    fn from(iv: Interval) -> Self {
        Self { lo: iv.lo, hi: iv.hi }
    }
}

#[pymethods]
impl PyInterval {
    #[new]
    fn new(lo: f64, hi: f64) -> PyResult<Self> {
        Ok(Interval::new(lo, hi).py()?.into())
    }

    fn length(&self) -> f64 {
        Interval { lo: self.lo, hi: self.hi }.length()
    }

    fn __contains__(&self, y: f64) -> bool {
        Interval { lo: self.lo, hi: self.hi }.contains(y)
    }

    fn __repr__(&self) -> String {
        format!("Interval({}, {})", self.lo, self.hi)
    }
}

/// A regression algorithm with fixed (or cross-validated) hyperparameters.
#[pyclass(name = "Estimator", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimator {
    alg: RegressionAlgorithm,
}

fn estimator(alg: RegressionAlgorithm) -> PyResult<PyEstimator> {
    alg.validate().py()?;
    Ok(PyEstimator { alg })
}

#[pymethods]
impl PyEstimator {
    #[staticmethod]
    fn zero() -> PyResult<Self> {
        estimator(RegressionAlgorithm::zero())
    }

    #[staticmethod]
    fn ols() -> PyResult<Self> {
        estimator(RegressionAlgorithm::ols())
    }

    #[staticmethod]
    fn ridge(lam: f64) -> PyResult<Self> {
        estimator(RegressionAlgorithm::ridge(lam))
    }

    #[staticmethod]
    fn lasso(lam: f64) -> PyResult<Self> {
        estimator(RegressionAlgorithm::lasso(lam))
    }

    /// Lasso with the penalty chosen by CV on `(x, y)`.
    #[staticmethod]
    #[pyo3(signature = (x, y, folds = 10, seed = 0))]
    fn lasso_cv(x: Vec<Vec<f64>>, y: Vec<f64>, folds: usize, seed: u64) -> PyResult<Self> {
        estimator(RegressionAlgorithm::lasso_cv(&dataset(x, y)?, folds, seed))
    }

    #[staticmethod]
    fn elastic_net(lam: f64, gamma: f64) -> PyResult<Self> {
        estimator(RegressionAlgorithm::elastic_net(lam, gamma))
    }

    #[staticmethod]
    fn stepwise(steps: usize) -> PyResult<Self> {
        estimator(RegressionAlgorithm::stepwise(steps))
    }

    #[staticmethod]
    fn kernel_smoother(bandwidth: f64) -> PyResult<Self> {
        estimator(RegressionAlgorithm::kernel_smoother(bandwidth))
    }

    #[staticmethod]
    fn bspline_additive(df: usize) -> PyResult<Self> {
        estimator(RegressionAlgorithm::bspline_additive(df))
    }

    fn fit(&self, x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<PyModel> {
        Ok(PyModel {
            model: self.alg.fit(&dataset(x, y)?).py()?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Estimator({})", self.alg.name())
    }
}

#[pyclass(name = "FittedModel", frozen)]
struct PyModel {
    model: FittedModel,
}

#[pymethods]
impl PyModel {
    fn predict(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        x.iter().map(|r| self.model.predict(r).py()).collect()
    }

    /// Coefficients of linear fits, `None` otherwise.
    fn coefficients(&self) -> Option<Vec<f64>> {
        self.model.coefficients().map(|c| c.iter().copied().collect())
    }
}

enum BandKind {
    Single(ConformalBand),
    Multi(MultiSplitBand),
}

/// A fitted prediction band; call `evaluate` at new points.
#[pyclass(name = "ConformalBand", frozen)]
struct PyBand {
    band: BandKind,
}

#[pymethods]
impl PyBand {
    #[getter]
    fn variant(&self) -> &'static str {
        match &self.band {
            BandKind::Single(b) => b.variant().as_str(),
            BandKind::Multi(_) => "multi_split",
        }
    }

    #[getter]
    fn alpha(&self) -> f64 {
        match &self.band {
            BandKind::Single(b) => b.alpha().alpha(),
            BandKind::Multi(b) => b.alpha(),
        }
    }

    fn evaluate(&self, x: Vec<f64>) -> PyResult<PyInterval> {
        let iv = match &self.band {
            BandKind::Single(b) => b.evaluate(&x),
            BandKind::Multi(b) => b.evaluate(&x),
        };
        Ok(iv.py()?.into())
    }

    fn evaluate_many(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<PyInterval>> {
        x.into_iter().map(|r| self.evaluate(r)).collect()
    }

    /// In-sample intervals of rank-one-out bands.
    fn in_sample(&self) -> Option<Vec<PyInterval>> {
        match &self.band {
            BandKind::Single(b) => b.in_sample().map(|pts| pts.iter().map(|p| p.interval.into()).collect()),
            BandKind::Multi(_) => None,
        }
    }

    fn to_json(&self) -> PyResult<String> {
        match &self.band {
            BandKind::Single(b) => b.to_json().py(),
            BandKind::Multi(_) => Err(PyValueError::new_err("multi-split bands have no JSON form")),
        }
    }
}

fn score(weighted: bool, mad: Option<&PyEstimator>, alg: &RegressionAlgorithm) -> ConformityScore {
    if weighted {
        ConformityScore::locally_weighted(mad.map(|m| m.alg.clone()).unwrap_or_else(|| alg.clone()))
    } else {
        ConformityScore::absolute()
    }
}

/// Conformal band of the given variant: `split`, `multi_split`, `jackknife`,
/// `naive`, `roo` or `roo_relaxed`.
#[pyfunction]
#[pyo3(signature = (estimator, x, y, alpha = 0.1, variant = "split", seed = 0, ratio = 0.5, weighted = false, mad_estimator = None, splits = 10))]
#[allow(clippy::too_many_arguments)]
fn conformal_band(
    py: Python<'_>,
    estimator: &PyEstimator,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    alpha: f64,
    variant: &str,
    seed: u64,
    ratio: f64,
    weighted: bool,
    mad_estimator: Option<PyRef<'_, PyEstimator>>,
    splits: usize,
) -> PyResult<PyBand> {
    let data = dataset(x, y)?;
    let alpha = level(alpha)?;
    let alg = estimator.alg.clone();
    let score = score(weighted, mad_estimator.as_deref(), &alg);
    let cfg = SplitConfig::new(seed, ratio).py()?;
    let variant = variant.to_owned();
    py.detach(move || {
        let band = match variant.as_str() {
            "split" => BandKind::Single(cf::split_conformal(&alg, &data, alpha, &cfg, &score)?),
            "jackknife" => BandKind::Single(cf::jackknife_band(&alg, &data, alpha, &score)?),
            "naive" => BandKind::Single(cf::naive_band(&alg, &data, alpha, &score)?),
            "roo" => BandKind::Single(cf::roo_split_conformal(&alg, &data, alpha, &cfg, &score)?),
            "roo_relaxed" => BandKind::Single(cf::roo_relaxed(&alg, &data, alpha, &cfg, &score)?),
            "multi_split" | "multi" => {
                let seeds: Vec<u64> = (0..splits as u64).map(|k| derive_seed(seed, k)).collect();
                BandKind::Multi(cf::multi_split_conformal(&alg, &data, alpha, ratio, &seeds, &score)?)
            }
            other => return Err(Error::InvalidParameter(format!("unknown variant `{other}`"))),
        };
        Ok(PyBand { band })
    })
    .py()
}

#[pyclass(name = "PredictionSet", frozen)]
struct PyPredictionSet {
    set: PredictionSet,
}

#[pymethods]
impl PyPredictionSet {
    #[getter]
    fn points(&self) -> Vec<f64> {
        self.set.points.clone()
    }

    #[getter]
    fn hull(&self) -> PyInterval {
        self.set.hull.into()
    }

    #[getter]
    fn non_contiguous(&self) -> bool {
        self.set.non_contiguous
    }

    fn length(&self) -> f64 {
        self.set.length()
    }

    fn __contains__(&self, y: f64) -> bool {
        self.set.contains(y)
    }
}

/// Full conformal prediction set at `query` over a trial grid.
#[pyfunction]
#[pyo3(signature = (estimator, x, y, query, alpha = 0.1, grid_lo = None, grid_hi = None, grid_n = 200, weighted = false))]
#[allow(clippy::too_many_arguments)]
fn full_conformal_set(
    py: Python<'_>,
    estimator: &PyEstimator,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    query: Vec<f64>,
    alpha: f64,
    grid_lo: Option<f64>,
    grid_hi: Option<f64>,
    grid_n: usize,
    weighted: bool,
) -> PyResult<PyPredictionSet> {
    let data = dataset(x, y)?;
    let alpha = level(alpha)?;
    let grid = match (grid_lo, grid_hi) {
        (Some(lo), Some(hi)) => TrialGrid::new(lo, hi, grid_n),
        (None, None) => TrialGrid::around(data.y().as_slice(), grid_n),
        _ => Err(Error::InvalidParameter("give both grid_lo and grid_hi, or neither".into())),
    }
    .py()?;
    let alg = estimator.alg.clone();
    let score = score(weighted, None, &alg);
    let set = py.detach(move || full_conformal(&alg, &data, &query, alpha, &grid, &score)).py()?;
    Ok(PyPredictionSet { set })
}

#[pyclass(name = "LocoReport", frozen)]
struct PyLocoReport {
    report: LocoReport,
}

#[pymethods]
impl PyLocoReport {
    #[getter]
    fn alpha(&self) -> f64 {
        self.report.alpha
    }

    #[getter]
    fn adjusted_alpha(&self) -> f64 {
        self.report.adjusted_alpha
    }

    /// Zero-based indices of the tested covariates.
    #[getter]
    fn tested(&self) -> Vec<usize> {
        self.report.tested.clone()
    }

    /// `(feature, theta_hat, z_interval, median_interval, sign_p, wilcoxon_p)`
    /// per tested covariate; p-values are one-sided.
    fn rows(&self) -> Vec<(String, f64, PyInterval, PyInterval, f64, f64)> {
        self.report
            .rows
            .iter()
            .map(|r| {
                (
                    r.feature.clone(),
                    r.z.mean,
                    r.z.interval.into(),
                    r.median_interval.into(),
                    r.sign.p_greater,
                    r.wilcoxon.p_greater,
                )
            })
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        self.report.to_json().py()
    }
}

/// Global LOCO inference on one split. `columns=None` tests every covariate;
/// `select="lasso_cv"` tests the active set of a CV-tuned lasso.
#[pyfunction]
#[pyo3(signature = (estimator, x, y, alpha = 0.1, seed = 0, ratio = 0.5, columns = None, select = None, folds = 10))]
#[allow(clippy::too_many_arguments)]
fn loco_global(
    py: Python<'_>,
    estimator: &PyEstimator,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    alpha: f64,
    seed: u64,
    ratio: f64,
    columns: Option<Vec<usize>>,
    select: Option<&str>,
    folds: usize,
) -> PyResult<PyLocoReport> {
    let data = dataset(x, y)?;
    let alpha = level(alpha)?;
    let cfg = SplitConfig::new(seed, ratio).py()?;
    let selection = match (select, columns) {
        (Some("lasso_cv"), None) => Selection::LassoCv {
            folds,
            seed: derive_seed(seed, 1),
        },
        (None, Some(c)) => Selection::Fixed(c),
        (None, None) => Selection::Fixed((0..data.d()).collect()),
        _ => return Err(PyValueError::new_err("use either columns or select=\"lasso_cv\"")),
    };
    let alg = estimator.alg.clone();
    let report = py.detach(move || loco::loco_global(&alg, &data, alpha, &cfg, &selection)).py()?;
    Ok(PyLocoReport { report })
}

/// Per-point LOCO intervals `W_j(X_i)` as `(row, j, Interval)` triples.
#[pyfunction]
#[pyo3(signature = (estimator, x, y, alpha = 0.1, seed = 0, ratio = 0.5, columns = None))]
#[allow(clippy::too_many_arguments)]
fn loco_local(
    py: Python<'_>,
    estimator: &PyEstimator,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    alpha: f64,
    seed: u64,
    ratio: f64,
    columns: Option<Vec<usize>>,
) -> PyResult<Vec<(usize, usize, PyInterval)>> {
    let data = dataset(x, y)?;
    let alpha = level(alpha)?;
    let cfg = SplitConfig::new(seed, ratio).py()?;
    let alg = estimator.alg.clone();
    let local = py
        .detach(move || loco::loco_local(&alg, &data, alpha, &cfg, columns.as_deref()))
        .py()?;
    Ok(local
        .intervals()
        .iter()
        .map(|iv| {
            let row = match iv.at {
                loco::Location::Sample(i) => i,
                loco::Location::Point(_) => usize::MAX,
            };
            (row, iv.j, iv.w.into())
        })
        .collect())
}

/// Training and test draws `(x, y, x_test, y_test)` from a simulation setting
/// (`A`, `B`, `C`, `D`, `sine_hetero`, `sine_homo`).
#[pyfunction]
#[pyo3(signature = (setting, n, d, sparsity = 5, coef = 8.0, seed = 0, n_test = 100))]
#[allow(clippy::type_complexity)]
fn simulate_setting(
    setting: &str,
    n: usize,
    d: usize,
    sparsity: usize,
    coef: f64,
    seed: u64,
    n_test: usize,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let setting: Setting = setting.parse().py()?;
    let spec = if setting.is_sine() {
        SettingSpec::sine(setting, n, seed)
    } else {
        SettingSpec::new(setting, n, d, sparsity, coef, seed)
    }
    .with_test_size(n_test);
    let sim = simbench::generate(&spec).py()?;
    Ok((
        sim.train.rows(),
        sim.train.y().iter().copied().collect(),
        sim.test.rows(),
        sim.test.y().iter().copied().collect(),
    ))
}

/// Runs an experiment (`T1`..`F7`); returns `(metrics_csv, manifest_json)`.
#[pyfunction]
#[pyo3(signature = (experiment, reps = 20, seed = 0, scale = 1.0, alpha = 0.1))]
fn run_experiment(
    py: Python<'_>,
    experiment: &str,
    reps: usize,
    seed: u64,
    scale: f64,
    alpha: f64,
) -> PyResult<(String, String)> {
    let experiment: Experiment = experiment.parse().py()?;
    let mut cfg = ExperimentConfig::new(experiment, reps, seed).with_scale(scale);
    cfg.alpha = alpha;
    let out = py.detach(move || simbench::run_experiment(&cfg)).py()?;
    let mut csv = Vec::new();
    out.write_csv(&mut csv).py()?;
    let csv = String::from_utf8(csv).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((csv, out.manifest_json().py()?))
}

#[pymodule]
fn conformal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInterval>()?;
    m.add_class::<PyEstimator>()?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyBand>()?;
    m.add_class::<PyPredictionSet>()?;
    m.add_class::<PyLocoReport>()?;
    m.add_function(wrap_pyfunction!(conformal_band, m)?)?;
    m.add_function(wrap_pyfunction!(full_conformal_set, m)?)?;
    m.add_function(wrap_pyfunction!(loco_global, m)?)?;
    m.add_function(wrap_pyfunction!(loco_local, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_setting, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
