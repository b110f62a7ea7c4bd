//! Base regression algorithms plugged into the conformal wrappers.

mod cv;
mod kernel;
mod lasso;
mod linear;
mod model;
mod parametric;
mod spline;

use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{Error, Result};

pub use cv::cross_validate;
pub use kernel::KernelSmootherFit;
pub use lasso::{kkt_violation, lambda_max, lasso_lambda_grid, solve_elastic_net, CdOptions, CdSolution};
pub use model::{absolute_residuals, Estimator, FittedModel, ModelMeta};
pub use parametric::{parametric_interval, ParametricPredictor};
pub use spline::{AdditiveSplineFit, CubicBSplineBasis};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmKind {
    /// Predicts 0 everywhere, ignoring the data.
    Zero,
    Ols,
    Ridge { lambda: f64 },
    Lasso { lambda: f64 },
    ElasticNet { lambda: f64, gamma: f64 },
    Stepwise { steps: usize },
    KernelSmoother { bandwidth: f64 },
    BsplineAdditive { df: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Tuning {
    Fixed,
    /// Choose the hyperparameter from `grid` by `folds`-fold CV.
    CrossValidated { folds: usize, grid: Vec<f64>, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionAlgorithm {
    pub kind: AlgorithmKind,
    pub tuning: Tuning,
}

impl RegressionAlgorithm {
    pub fn new(kind: AlgorithmKind) -> Result<Self> {
        let alg = Self {
            kind,
            tuning: Tuning::Fixed,
        };
        alg.validate()?;
        Ok(alg)
    }

    fn fixed(kind: AlgorithmKind) -> Self {
        Self {
            kind,
            tuning: Tuning::Fixed,
        }
    }

    pub fn zero() -> Self {
        Self::fixed(AlgorithmKind::Zero)
    }

    pub fn ols() -> Self {
        Self::fixed(AlgorithmKind::Ols)
    }

    pub fn ridge(lambda: f64) -> Self {
        Self::fixed(AlgorithmKind::Ridge { lambda })
    }

    pub fn lasso(lambda: f64) -> Self {
        Self::fixed(AlgorithmKind::Lasso { lambda })
    }

    /// Lasso tuned by `folds`-fold CV over 50 log-spaced penalties from
    /// `lambda_max` down to 1% of it.
    pub fn lasso_cv(data: &DataSet, folds: usize, seed: u64) -> Self {
        let grid = lasso_lambda_grid(data, 50, 1e-2);
        Self::lasso(grid[0]).with_cv(folds, grid, seed)
    }

    pub fn elastic_net(lambda: f64, gamma: f64) -> Self {
        Self::fixed(AlgorithmKind::ElasticNet { lambda, gamma })
    }

    pub fn stepwise(steps: usize) -> Self {
        Self::fixed(AlgorithmKind::Stepwise { steps })
    }

    pub fn kernel_smoother(bandwidth: f64) -> Self {
        Self::fixed(AlgorithmKind::KernelSmoother { bandwidth })
    }

    pub fn bspline_additive(df: usize) -> Self {
        Self::fixed(AlgorithmKind::BsplineAdditive { df })
    }

    pub fn with_cv(mut self, folds: usize, grid: Vec<f64>, seed: u64) -> Self {
        self.tuning = Tuning::CrossValidated { folds, grid, seed };
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match self.kind {
            AlgorithmKind::Ridge { lambda }
            | AlgorithmKind::Lasso { lambda }
            | AlgorithmKind::ElasticNet { lambda, .. }
                if !(lambda >= 0.0 && lambda.is_finite()) =>
            {
                return bad(format!("penalty must be finite and nonnegative, got {lambda}"));
            }
            AlgorithmKind::ElasticNet { gamma, .. } if !(0.0..=1.0).contains(&gamma) => {
                return bad(format!("mixing weight must lie in [0, 1], got {gamma}"));
            }
            AlgorithmKind::KernelSmoother { bandwidth } if !(bandwidth > 0.0 && bandwidth.is_finite()) => {
                return bad(format!("bandwidth must be positive, got {bandwidth}"));
            }
            AlgorithmKind::BsplineAdditive { df } if df < 3 => {
                return bad(format!("spline df must be at least 3, got {df}"));
            }
            _ => {}
        }
        if let Tuning::CrossValidated { folds, grid, .. } = &self.tuning {
            if grid.is_empty() {
                return bad("cross-validation grid is empty".into());
            }
            if *folds < 2 {
                return bad(format!("cross-validation needs at least 2 folds, got {folds}"));
            }
            if self.hyperparameter().is_none() {
                return bad(format!("{} has no hyperparameter to tune", self.kind_name()));
            }
            for &v in grid {
                self.with_hyperparameter(v)?.validate()?;
            }
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            AlgorithmKind::Zero => "zero",
            AlgorithmKind::Ols => "ols",
            AlgorithmKind::Ridge { .. } => "ridge",
            AlgorithmKind::Lasso { .. } => "lasso",
            AlgorithmKind::ElasticNet { .. } => "elastic_net",
            AlgorithmKind::Stepwise { .. } => "stepwise",
            AlgorithmKind::KernelSmoother { .. } => "kernel_smoother",
            AlgorithmKind::BsplineAdditive { .. } => "bspline_additive",
        }
    }

    /// The tunable hyperparameter (penalty, steps, bandwidth or df).
    pub fn hyperparameter(&self) -> Option<f64> {
        match self.kind {
            AlgorithmKind::Zero | AlgorithmKind::Ols => None,
            AlgorithmKind::Ridge { lambda }
            | AlgorithmKind::Lasso { lambda }
            | AlgorithmKind::ElasticNet { lambda, .. } => Some(lambda),
            AlgorithmKind::Stepwise { steps } => Some(steps as f64),
            AlgorithmKind::KernelSmoother { bandwidth } => Some(bandwidth),
            AlgorithmKind::BsplineAdditive { df } => Some(df as f64),
        }
    }

    /// Same algorithm with a fixed hyperparameter `value`. Integer-valued
    /// hyperparameters must be whole numbers.
    pub fn with_hyperparameter(&self, value: f64) -> Result<Self> {
        let whole = || {
            if value >= 0.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidParameter(format!(
                    "{} expects a whole number, got {value}",
                    self.kind_name()
                )))
            }
        };
        let kind = match self.kind {
            AlgorithmKind::Zero | AlgorithmKind::Ols => {
                return Err(Error::InvalidParameter(format!(
                    "{} has no hyperparameter",
                    self.kind_name()
                )))
            }
            AlgorithmKind::Ridge { .. } => AlgorithmKind::Ridge { lambda: value },
            AlgorithmKind::Lasso { .. } => AlgorithmKind::Lasso { lambda: value },
            AlgorithmKind::ElasticNet { gamma, .. } => AlgorithmKind::ElasticNet { lambda: value, gamma },
            AlgorithmKind::Stepwise { .. } => AlgorithmKind::Stepwise { steps: whole()? },
            AlgorithmKind::KernelSmoother { .. } => AlgorithmKind::KernelSmoother { bandwidth: value },
            AlgorithmKind::BsplineAdditive { .. } => AlgorithmKind::BsplineAdditive { df: whole()? },
        };
        Ok(Self::fixed(kind))
    }

    /// Orders hyperparameter values so that larger means more regularized.
    pub(crate) fn regularization(&self, value: f64) -> f64 {
        match self.kind {
            AlgorithmKind::Stepwise { .. } | AlgorithmKind::BsplineAdditive { .. } => -value,
            _ => value,
        }
    }

    /// Resolves cross-validated tuning; fixed algorithms are returned as is.
    pub fn resolve(&self, data: &DataSet) -> Result<Self> {
        match self.tuning {
            Tuning::Fixed => Ok(self.clone()),
            Tuning::CrossValidated { .. } => cross_validate(self, data),
        }
    }

    fn fit_fixed(&self, data: &DataSet) -> Result<FittedModel> {
        match self.kind {
            AlgorithmKind::Zero => Ok(FittedModel::constant(data.d(), 0.0, "zero")),
            AlgorithmKind::Ols => linear::fit_ols(data),
            AlgorithmKind::Ridge { lambda } => linear::fit_ridge(data, lambda),
            AlgorithmKind::Lasso { lambda } => lasso::fit_elastic_net(data, lambda, 1.0, "lasso"),
            AlgorithmKind::ElasticNet { lambda, gamma } => {
                lasso::fit_elastic_net(data, lambda, gamma, "elastic_net")
            }
            AlgorithmKind::Stepwise { steps } => linear::fit_stepwise(data, steps),
            AlgorithmKind::KernelSmoother { bandwidth } => {
                Ok(FittedModel::kernel(KernelSmootherFit::new(data, bandwidth)))
            }
            AlgorithmKind::BsplineAdditive { df } => {
                Ok(FittedModel::spline(AdditiveSplineFit::fit(data, df)?))
            }
        }
    }
}

impl Estimator for RegressionAlgorithm {
    fn fit(&self, data: &DataSet) -> Result<FittedModel> {
        self.validate()?;
        match self.tuning {
            Tuning::Fixed => self.fit_fixed(data),
            Tuning::CrossValidated { .. } => cross_validate(self, data)?.fit_fixed(data),
        }
    }

    fn is_linear_smoother(&self) -> bool {
        matches!(self.tuning, Tuning::Fixed)
            && matches!(
                self.kind,
                AlgorithmKind::Zero
                    | AlgorithmKind::Ols
                    | AlgorithmKind::Ridge { .. }
                    | AlgorithmKind::KernelSmoother { .. }
                    | AlgorithmKind::BsplineAdditive { .. }
            )
    }

    fn name(&self) -> String {
        match self.hyperparameter() {
            Some(v) if matches!(self.tuning, Tuning::Fixed) => format!("{}({v})", self.kind_name()),
            Some(_) => format!("{}(cv)", self.kind_name()),
            None => self.kind_name().to_string(),
        }
    }
}

/// Trains `alg` on `data`.
pub fn fit(alg: &RegressionAlgorithm, data: &DataSet) -> Result<FittedModel> {
    alg.fit(data)
}

/// Fits a (possibly penalized) elastic net along a whole penalty path with
/// warm starts; used by cross-validation and the experiments.
pub fn fit_path(alg: &RegressionAlgorithm, data: &DataSet, lambdas: &[f64]) -> Result<Vec<FittedModel>> {
    match alg.kind {
        AlgorithmKind::Lasso { .. } => lasso::fit_elastic_net_path(data, lambdas, 1.0, "lasso"),
        AlgorithmKind::ElasticNet { gamma, .. } => {
            lasso::fit_elastic_net_path(data, lambdas, gamma, "elastic_net")
        }
        _ => lambdas
            .iter()
            .map(|&v| alg.with_hyperparameter(v)?.fit_fixed(data))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::seq::SliceRandom;

    fn random_data(n: usize, d: usize, seed: u64) -> DataSet {
        let mut r = rng::seeded(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng::std_normal(&mut r)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|x| x[0] - 0.5 * x[1] + rng::std_normal(&mut r) * 0.5)
            .collect();
        DataSet::from_rows(&rows, &y).unwrap()
    }

    #[test]
    fn fits_are_row_permutation_invariant() {
        let data = random_data(40, 3, 1);
        let mut perm: Vec<usize> = (0..40).collect();
        perm.shuffle(&mut rng::seeded(2));
        let shuffled = data.subset(&perm);
        let probe = [[0.3, -1.0, 2.0], [1.5, 0.2, -0.7]];
        for alg in [
            RegressionAlgorithm::ols(),
            RegressionAlgorithm::ridge(0.5),
            RegressionAlgorithm::lasso(0.05),
            RegressionAlgorithm::elastic_net(0.05, 0.5),
            RegressionAlgorithm::stepwise(2),
            RegressionAlgorithm::kernel_smoother(0.8),
            RegressionAlgorithm::bspline_additive(5),
        ] {
            let a = alg.fit(&data).unwrap();
            let b = alg.fit(&shuffled).unwrap();
            for x in &probe {
                let (pa, pb) = (a.predict(x).unwrap(), b.predict(x).unwrap());
                assert!((pa - pb).abs() < 1e-8, "{}: {pa} vs {pb}", alg.name());
            }
        }
    }

    #[test]
    fn full_stepwise_is_ols() {
        let data = random_data(30, 4, 3);
        let a = RegressionAlgorithm::stepwise(4).fit(&data).unwrap();
        let b = RegressionAlgorithm::ols().fit(&data).unwrap();
        let diff = a.coefficients().unwrap() - b.coefficients().unwrap();
        assert!(diff.amax() < 1e-10);
    }

    #[test]
    fn validation_rejects_bad_hyperparameters() {
        assert!(RegressionAlgorithm::ridge(-1.0).validate().is_err());
        assert!(RegressionAlgorithm::elastic_net(1.0, 1.5).validate().is_err());
        assert!(RegressionAlgorithm::kernel_smoother(0.0).validate().is_err());
        assert!(RegressionAlgorithm::bspline_additive(2).validate().is_err());
        assert!(RegressionAlgorithm::lasso(1.0).with_cv(5, vec![], 0).validate().is_err());
        assert!(RegressionAlgorithm::lasso(1.0).with_cv(1, vec![1.0], 0).validate().is_err());
        assert!(RegressionAlgorithm::ols().with_cv(5, vec![1.0], 0).validate().is_err());
        assert!(RegressionAlgorithm::stepwise(1).with_cv(5, vec![1.5], 0).validate().is_err());
    }

    #[test]
    fn linear_smoother_flags() {
        assert!(RegressionAlgorithm::ridge(1.0).is_linear_smoother());
        assert!(RegressionAlgorithm::bspline_additive(4).is_linear_smoother());
        assert!(!RegressionAlgorithm::lasso(1.0).is_linear_smoother());
        assert!(!RegressionAlgorithm::ridge(1.0)
            .with_cv(3, vec![1.0], 0)
            .is_linear_smoother());
    }

    #[test]
    fn algorithm_round_trips_through_json() {
        let alg = RegressionAlgorithm::elastic_net(0.1, 0.5).with_cv(10, vec![0.1, 1.0], 4);
        let text = serde_json::to_string(&alg).unwrap();
        let back: RegressionAlgorithm = serde_json::from_str(&text).unwrap();
        assert_eq!(alg, back);
    }
}
