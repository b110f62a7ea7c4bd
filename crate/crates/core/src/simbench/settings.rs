use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::estimators::CubicBSplineBasis;
use crate::rng::{self, Rng};

/// Shape parameter of the skew-normal feature component.
const SKEW_SHAPE: f64 = 5.0;
/// Standard normal 0.1% / 99.9% quantiles; boundary of the spline transform.
const SPLINE_BOUND: f64 = 3.090_232_306_167_813;
/// Monte Carlo draws used for `E|mu(X)|^3` in setting C.
const CUBE_MOMENT_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Setting {
    A,
    B,
    C,
    D,
    #[serde(rename = "sine_hetero")]
    SineHetero,
    #[serde(rename = "sine_homo")]
    SineHomo,
}

impl Setting {
    pub fn as_str(self) -> &'static str {
        match self {
            Setting::A => "A",
            Setting::B => "B",
            Setting::C => "C",
            Setting::D => "D",
            Setting::SineHetero => "sine_hetero",
            Setting::SineHomo => "sine_homo",
        }
    }

    pub fn is_sine(self) -> bool {
        matches!(self, Setting::SineHetero | Setting::SineHomo)
    }
}

impl std::str::FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Setting::A),
            "B" | "b" => Ok(Setting::B),
            "C" | "c" => Ok(Setting::C),
            "D" | "d" => Ok(Setting::D),
            "sine_hetero" => Ok(Setting::SineHetero),
            "sine_homo" => Ok(Setting::SineHomo),
            other => Err(Error::InvalidParameter(format!("unknown setting `{other}`"))),
        }
    }
}

/// Weights of the sequential autocorrelation in setting C: the current value
/// and up to `predecessor.len()` earlier columns, renormalized near the edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Autocorrelation {
    pub current: f64,
    pub predecessor: Vec<f64>,
}

impl Default for Autocorrelation {
    fn default() -> Self {
        Self {
            current: 0.4,
            predecessor: vec![0.2, 0.2, 0.2],
        }
    }
}

impl Autocorrelation {
    /// Normalized weights for column `j`: `[current, lag 1, lag 2, ...]`.
    fn weights(&self, j: usize) -> Vec<f64> {
        let lags = self.predecessor.len().min(j);
        let mut w = vec![self.current];
        w.extend_from_slice(&self.predecessor[..lags]);
        let total: f64 = w.iter().sum();
        w.iter().map(|v| v / total).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSpec {
    pub setting: Setting,
    pub n: usize,
    pub n_test: usize,
    pub d: usize,
    pub sparsity: usize,
    pub coef_magnitude: f64,
    pub seed: u64,
    #[serde(default)]
    pub autocorrelation: Autocorrelation,
}

impl SettingSpec {
    pub fn new(setting: Setting, n: usize, d: usize, sparsity: usize, coef_magnitude: f64, seed: u64) -> Self {
        Self {
            setting,
            n,
            n_test: 100,
            d,
            sparsity,
            coef_magnitude,
            seed,
            autocorrelation: Autocorrelation::default(),
        }
    }

    /// The univariate sine example on `n` points.
    pub fn sine(setting: Setting, n: usize, seed: u64) -> Self {
        Self::new(setting, n, 1, 1, 1.0, seed)
    }

    pub fn with_test_size(mut self, n_test: usize) -> Self {
        self.n_test = n_test;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.n == 0 || self.d == 0 {
            return bad(format!("need n, d >= 1, got n = {}, d = {}", self.n, self.d));
        }
        if self.sparsity > self.d {
            return bad(format!("sparsity {} exceeds d = {}", self.sparsity, self.d));
        }
        if !self.coef_magnitude.is_finite() {
            return bad("coefficient magnitude must be finite".into());
        }
        match self.setting {
            Setting::C if self.d < 4 => bad(format!("setting C needs d >= 4, got {}", self.d)),
            s if s.is_sine() && self.d != 1 => bad(format!("sine settings are univariate, got d = {}", self.d)),
            _ => {
                let w = &self.autocorrelation;
                if w.current <= 0.0 || w.predecessor.iter().any(|v| *v < 0.0) {
                    return bad("autocorrelation weights must be positive".into());
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDistribution {
    Normal,
    StudentT2,
}

impl NoiseDistribution {
    fn sample(self, r: &mut Rng) -> f64 {
        match self {
            NoiseDistribution::Normal => rng::std_normal(r),
            NoiseDistribution::StudentT2 => StudentT::new(2.0).expect("valid dof").sample(r),
        }
    }

    /// Upper `alpha` quantile of `|eps|`.
    pub fn abs_quantile(self, alpha: f64) -> f64 {
        let p = 1.0 - alpha / 2.0;
        match self {
            NoiseDistribution::Normal => Normal::standard().inverse_cdf(p),
            NoiseDistribution::StudentT2 => StudentsT::new(0.0, 1.0, 2.0).expect("valid dof").inverse_cdf(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseScale {
    Constant { value: f64 },
    /// `factor * |x_1|`.
    AbsFeature { factor: f64 },
    /// `1 + 2 |mu(x)|^3 / moment`.
    CubicMean { moment: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeanFunction {
    /// `sum_k coef_k (x_{j_k} - center_{j_k}) / scale_{j_k}`.
    Linear {
        support: Vec<usize>,
        coef: Vec<f64>,
        center: Vec<f64>,
        scale: Vec<f64>,
    },
    /// Three cubic B-spline functions per active coordinate, each with its own
    /// coefficient.
    Spline { support: Vec<usize>, coef: Vec<[f64; 3]> },
    Sine,
}

impl MeanFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            MeanFunction::Linear {
                support,
                coef,
                center,
                scale,
            } => support
                .iter()
                .zip(coef)
                .map(|(&j, b)| b * (x[j] - center[j]) / scale[j])
                .sum(),
            MeanFunction::Spline { support, coef } => {
                let basis = spline_basis();
                support
                    .iter()
                    .zip(coef)
                    .map(|(&j, b)| {
                        let v = basis.values(x[j]);
                        b.iter().zip(&v[1..]).map(|(c, f)| c * f).sum::<f64>()
                    })
                    .sum()
            }
            MeanFunction::Sine => x[0].sin(),
        }
    }
}

fn spline_basis() -> CubicBSplineBasis {
    CubicBSplineBasis::new(-SPLINE_BOUND, SPLINE_BOUND, &[]).expect("fixed boundary")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureModel {
    StandardNormal,
    /// Entries from the equal N / skew-normal / Bernoulli mixture, then
    /// sequentially autocorrelated.
    Mixture { autocorrelation: Autocorrelation },
    Uniform { lo: f64, hi: f64 },
}

/// Simulation truth: feature law, mean function and noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub setting: Setting,
    pub d: usize,
    pub features: FeatureModel,
    pub mean: MeanFunction,
    pub noise: NoiseDistribution,
    pub scale: NoiseScale,
}

impl Truth {
    pub fn mean(&self, x: &[f64]) -> f64 {
        self.mean.eval(x)
    }

    /// Multiplier applied to the standardized noise at `x`.
    pub fn noise_scale(&self, x: &[f64]) -> f64 {
        match &self.scale {
            NoiseScale::Constant { value } => *value,
            NoiseScale::AbsFeature { factor } => factor * x[0].abs(),
            NoiseScale::CubicMean { moment } => 1.0 + 2.0 * self.mean(x).abs().powi(3) / moment,
        }
    }

    pub fn sample_features(&self, n: usize, r: &mut Rng) -> DMatrix<f64> {
        let d = self.d;
        match &self.features {
            FeatureModel::StandardNormal => DMatrix::from_fn(n, d, |_, _| rng::std_normal(r)),
            FeatureModel::Uniform { lo, hi } => DMatrix::from_fn(n, d, |_, _| r.random_range(*lo..*hi)),
            FeatureModel::Mixture { autocorrelation } => {
                let mut x = DMatrix::from_fn(n, d, |_, _| mixture_draw(r));
                for j in 0..d {
                    let w = autocorrelation.weights(j);
                    for i in 0..n {
                        x[(i, j)] = w.iter().enumerate().map(|(lag, wl)| wl * x[(i, j - lag)]).sum();
                    }
                }
                x
            }
        }
    }

    /// Fresh sample of `n` observations.
    pub fn sample(&self, n: usize, r: &mut Rng) -> Result<DataSet> {
        let x = self.sample_features(n, r);
        let y = DVector::from_fn(n, |i, _| {
            let row: Vec<f64> = x.row(i).iter().copied().collect();
            self.mean(&row) + self.noise_scale(&row) * self.noise.sample(r)
        });
        DataSet::new(x, y)
    }

    /// Upper `alpha` quantile of the standardized noise magnitude.
    pub fn noise_quantile(&self, alpha: f64) -> f64 {
        self.noise.abs_quantile(alpha)
    }
}

fn skew_normal(r: &mut Rng) -> f64 {
    let delta = SKEW_SHAPE / (1.0 + SKEW_SHAPE * SKEW_SHAPE).sqrt();
    delta * rng::std_normal(r).abs() + (1.0 - delta * delta).sqrt() * rng::std_normal(r)
}

fn mixture_draw(r: &mut Rng) -> f64 {
    match r.random_range(0..3) {
        0 => rng::std_normal(r),
        1 => skew_normal(r),
        _ => {
            if r.random_bool(0.5) {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Mean and variance of one raw mixture entry.
pub fn mixture_moments() -> (f64, f64) {
    let delta = SKEW_SHAPE / (1.0 + SKEW_SHAPE * SKEW_SHAPE).sqrt();
    let sn_mean = delta * (2.0 / std::f64::consts::PI).sqrt();
    let means = [0.0, sn_mean, 0.5];
    let second = [1.0, 1.0, 0.5];
    let m = means.iter().sum::<f64>() / 3.0;
    let m2 = second.iter().sum::<f64>() / 3.0;
    (m, m2 - m * m)
}

/// Population mean and standard deviation of each autocorrelated column.
/// Every column is a convex combination of i.i.d. raw entries, so the mean is
/// unchanged and the variance is the raw variance times the sum of squared
/// combination weights.
fn mixture_column_moments(d: usize, ac: &Autocorrelation) -> (Vec<f64>, Vec<f64>) {
    let (m, v) = mixture_moments();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut sd = Vec::with_capacity(d);
    for j in 0..d {
        let w = ac.weights(j);
        let mut row = vec![0.0; j + 1];
        row[j] = w[0];
        for (lag, wl) in w.iter().enumerate().skip(1) {
            for (k, a) in rows[j - lag].iter().enumerate() {
                row[k] += wl * a;
            }
        }
        sd.push((v * row.iter().map(|a| a * a).sum::<f64>()).sqrt());
        rows.push(row);
    }
    (vec![m; d], sd)
}

/// A simulated problem: training and test draws from the same truth.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub spec: SettingSpec,
    pub train: DataSet,
    pub test: DataSet,
    pub truth: Truth,
}

/// The truth for `spec` (support and coefficient signs drawn from its seed).
pub fn truth_for(spec: &SettingSpec) -> Result<Truth> {
    spec.validate()?;
    let mut r = rng::seeded(rng::derive_seed(spec.seed, 0));
    let d = spec.d;
    let mut support = index::sample(&mut r, d, spec.sparsity).into_vec();
    support.sort_unstable();
    let sign = |r: &mut Rng| if r.random_bool(0.5) { spec.coef_magnitude } else { -spec.coef_magnitude };
    let coef: Vec<f64> = support.iter().map(|_| sign(&mut r)).collect();
    let linear = |center: Vec<f64>, scale: Vec<f64>| MeanFunction::Linear {
        support: support.clone(),
        coef: coef.clone(),
        center,
        scale,
    };
    let truth = match spec.setting {
        Setting::A | Setting::D => Truth {
            setting: spec.setting,
            d,
            features: FeatureModel::StandardNormal,
            mean: linear(vec![0.0; d], vec![1.0; d]),
            noise: NoiseDistribution::Normal,
            scale: NoiseScale::Constant { value: 1.0 },
        },
        Setting::B => {
            let coef = support.iter().map(|_| [sign(&mut r), sign(&mut r), sign(&mut r)]).collect();
            Truth {
                setting: spec.setting,
                d,
                features: FeatureModel::StandardNormal,
                mean: MeanFunction::Spline {
                    support: support.clone(),
                    coef,
                },
                noise: NoiseDistribution::StudentT2,
                scale: NoiseScale::Constant { value: 1.0 },
            }
        }
        Setting::C => {
            let (center, scale) = mixture_column_moments(d, &spec.autocorrelation);
            let mut truth = Truth {
                setting: spec.setting,
                d,
                features: FeatureModel::Mixture {
                    autocorrelation: spec.autocorrelation.clone(),
                },
                mean: linear(center, scale),
                noise: NoiseDistribution::StudentT2,
                scale: NoiseScale::CubicMean { moment: 1.0 },
            };
            let x = truth.sample_features(CUBE_MOMENT_DRAWS, &mut rng::seeded(rng::derive_seed(spec.seed, 3)));
            let moment = (0..CUBE_MOMENT_DRAWS)
                .map(|i| {
                    let row: Vec<f64> = x.row(i).iter().copied().collect();
                    truth.mean(&row).abs().powi(3)
                })
                .sum::<f64>()
                / CUBE_MOMENT_DRAWS as f64;
            truth.scale = NoiseScale::CubicMean {
                moment: moment.max(f64::MIN_POSITIVE),
            };
            truth
        }
        Setting::SineHetero | Setting::SineHomo => {
            let pi = std::f64::consts::PI;
            Truth {
                setting: spec.setting,
                d,
                features: FeatureModel::Uniform { lo: 0.0, hi: 2.0 * pi },
                mean: MeanFunction::Sine,
                noise: NoiseDistribution::Normal,
                scale: if spec.setting == Setting::SineHetero {
                    NoiseScale::AbsFeature { factor: pi / 20.0 }
                } else {
                    NoiseScale::Constant { value: pi * pi / 20.0 }
                },
            }
        }
    };
    Ok(truth)
}

pub fn generate(spec: &SettingSpec) -> Result<Simulation> {
    let truth = truth_for(spec)?;
    let train = truth.sample(spec.n, &mut rng::seeded(rng::derive_seed(spec.seed, 1)))?;
    let test = truth.sample(spec.n_test.max(1), &mut rng::seeded(rng::derive_seed(spec.seed, 2)))?;
    Ok(Simulation {
        spec: spec.clone(),
        train,
        test,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn column_stats(v: &[f64]) -> (f64, f64, f64) {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
        let skew = v.iter().map(|a| ((a - m) / var.sqrt()).powi(3)).sum::<f64>() / n;
        (m, var, skew)
    }

    #[test]
    fn setting_a_response_is_centred() {
        let spec = SettingSpec::new(Setting::A, 10, 10, 10, 1.0, 3);
        let truth = truth_for(&spec).unwrap();
        let data = truth.sample(100_000, &mut rng::seeded(4)).unwrap();
        let (m, var, _) = column_stats(data.y().as_slice());
        // Var(y) = 10 + 1
        assert!(m.abs() < 3.0 * (var / 1e5).sqrt(), "mean {m}");
    }

    #[test]
    fn setting_a_signal_variance() {
        let spec = SettingSpec::new(Setting::A, 10, 10, 10, 1.0, 8);
        let truth = truth_for(&spec).unwrap();
        let x = truth.sample_features(100_000, &mut rng::seeded(9));
        let mu: Vec<f64> = (0..x.nrows())
            .map(|i| truth.mean(&x.row(i).iter().copied().collect::<Vec<_>>()))
            .collect();
        let (_, var, _) = column_stats(&mu);
        // sd of a sample variance of N(0, 10) draws is 10 sqrt(2 / n)
        assert!((var - 10.0).abs() < 4.0 * 10.0 * (2.0f64 / 1e5).sqrt(), "var {var}");
    }

    #[test]
    fn sine_noise_scales() {
        let pi = std::f64::consts::PI;
        let hetero = truth_for(&SettingSpec::sine(Setting::SineHetero, 10, 1)).unwrap();
        assert!((hetero.noise_scale(&[pi]) - pi * pi / 20.0).abs() < 1e-12);
        let homo = truth_for(&SettingSpec::sine(Setting::SineHomo, 10, 1)).unwrap();
        assert_eq!(homo.noise_scale(&[0.1]), homo.noise_scale(&[6.0]));
        let d = hetero.sample(1000, &mut rng::seeded(2)).unwrap();
        assert!(d.x().iter().all(|&v| (0.0..2.0 * pi).contains(&v)));
    }

    #[test]
    fn mixture_feature_moments() {
        let spec = SettingSpec::new(Setting::C, 10, 6, 2, 1.0, 5);
        let truth = truth_for(&spec).unwrap();
        let n = 200_000;
        let x = truth.sample_features(n, &mut rng::seeded(6));
        let (center, scale) = mixture_column_moments(6, &spec.autocorrelation);
        // raw entry skewness, from the component third moments
        let delta = SKEW_SHAPE / (1.0 + SKEW_SHAPE * SKEW_SHAPE).sqrt();
        let c = (2.0 / std::f64::consts::PI).sqrt();
        let sn3 = c * delta * (3.0 - delta * delta);
        let (m, v) = mixture_moments();
        let raw3 = (0.0 + sn3 + 0.5) / 3.0;
        let raw2 = v + m * m;
        let central3 = raw3 - 3.0 * m * raw2 + 2.0 * m.powi(3);
        let skew0 = central3 / v.powf(1.5);
        for j in 0..6 {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            let (mean, var, skew) = column_stats(&col);
            let se = (var / n as f64).sqrt();
            assert!((mean - center[j]).abs() < 4.0 * se, "mean col {j}");
            assert!((var.sqrt() - scale[j]).abs() < 0.01 * scale[j], "sd col {j}");
            if j == 0 {
                assert!((skew - skew0).abs() < 0.05, "skew {skew} vs {skew0}");
            }
        }
        // neighbouring columns are positively correlated
        let a: Vec<f64> = x.column(3).iter().copied().collect();
        let b: Vec<f64> = x.column(4).iter().copied().collect();
        let cov = a.iter().zip(&b).map(|(p, q)| (p - center[3]) * (q - center[4])).sum::<f64>() / n as f64;
        assert!(cov / (scale[3] * scale[4]) > 0.3);
    }

    #[test]
    fn spline_mean_uses_bounded_basis() {
        let spec = SettingSpec::new(Setting::B, 10, 4, 2, 2.0, 1);
        let truth = truth_for(&spec).unwrap();
        let far = truth.mean(&[100.0; 4]);
        let edge = truth.mean(&[SPLINE_BOUND; 4]);
        assert!((far - edge).abs() < 1e-12);
        assert!(far.abs() <= 2.0 * 3.0 * 2.0 + 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SettingSpec::new(Setting::C, 30, 8, 3, 1.0, 11);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.test, b.test);
        assert_eq!(a.truth, b.truth);
        let c = generate(&SettingSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn invalid_specs() {
        assert!(truth_for(&SettingSpec::new(Setting::A, 10, 3, 4, 1.0, 0)).is_err());
        assert!(truth_for(&SettingSpec::new(Setting::C, 10, 3, 1, 1.0, 0)).is_err());
        assert!(truth_for(&SettingSpec::new(Setting::SineHetero, 10, 2, 1, 1.0, 0)).is_err());
    }

    #[test]
    fn noise_quantiles() {
        assert!((NoiseDistribution::Normal.abs_quantile(0.1) - 1.644_853_626_951_472).abs() < 1e-9);
        // t(2): P(|T| > q) = 1 - q / sqrt(2 + q^2)
        let q = NoiseDistribution::StudentT2.abs_quantile(0.1);
        assert!((1.0 - q / (2.0 + q * q).sqrt() - 0.1).abs() < 1e-9);
    }
}
