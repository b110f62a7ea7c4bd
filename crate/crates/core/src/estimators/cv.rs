use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{fit_path, RegressionAlgorithm, Tuning};
use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::rng;

/// Replaces cross-validated tuning by the grid value with the smallest
/// K-fold mean squared prediction error. Ties go to the more regularized
/// value. Fold assignment depends only on the seed and `n`.
pub fn cross_validate(alg: &RegressionAlgorithm, data: &DataSet) -> Result<RegressionAlgorithm> {
    let Tuning::CrossValidated { folds, ref grid, seed } = alg.tuning else {
        return Err(Error::InvalidParameter(
            "cross_validate needs an algorithm with cross-validated tuning".into(),
        ));
    };
    alg.validate()?;
    if grid.len() == 1 {
        return alg.with_hyperparameter(grid[0]);
    }
    let n = data.n();
    if n < folds {
        return Err(Error::InvalidParameter(format!(
            "{folds}-fold cross-validation needs at least {folds} observations, got {n}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(seed));
    let mut fold_of = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        fold_of[i] = pos % folds;
    }

    let per_fold: Vec<Vec<f64>> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (train, test): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] != f);
            let train = data.subset(&train);
            let test = data.subset(&test);
            let models = fit_path(alg, &train, grid)?;
            models
                .iter()
                .map(|m| {
                    let pred = m.predict_rows(test.x())?;
                    Ok(pred
                        .iter()
                        .zip(test.y().iter())
                        .map(|(p, y)| (y - p) * (y - p))
                        .sum::<f64>())
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, f64)> = None;
    for (g, &value) in grid.iter().enumerate() {
        let err = per_fold.iter().map(|f| f[g]).sum::<f64>() / n as f64;
        let better = match best {
            None => true,
            Some((best_err, best_value)) => {
                let tol = 1e-12 * best_err.abs().max(err.abs());
                err < best_err - tol
                    || ((err - best_err).abs() <= tol
                        && alg.regularization(value) > alg.regularization(best_value))
            }
        };
        if better {
            best = Some((err, value));
        }
    }
    let (_, value) = best.expect("grid is nonempty");
    alg.with_hyperparameter(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Estimator;

    fn noise_data(n: usize, d: usize, seed: u64) -> DataSet {
        let mut r = rng::seeded(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng::std_normal(&mut r)).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| rng::std_normal(&mut r)).collect();
        DataSet::from_rows(&rows, &y).unwrap()
    }

    #[test]
    fn single_value_grid() {
        let data = noise_data(20, 3, 0);
        let alg = RegressionAlgorithm::ridge(1.0).with_cv(5, vec![0.3], 1);
        let chosen = cross_validate(&alg, &data).unwrap();
        assert_eq!(chosen, RegressionAlgorithm::ridge(0.3));
    }

    /// Direct evaluation of the CV error for each candidate, recomputing the
    /// folds from the same seed.
    fn cv_error_oracle(alg: &RegressionAlgorithm, data: &DataSet, folds: usize, seed: u64) -> f64 {
        let n = data.n();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng::seeded(seed));
        let mut total = 0.0;
        for f in 0..folds {
            let test: Vec<usize> = (0..n).filter(|&p| p % folds == f).map(|p| perm[p]).collect();
            let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
            let m = alg.fit(&data.subset(&train)).unwrap();
            for &i in &test {
                let e = data.y()[i] - m.predict(&data.row(i)).unwrap();
                total += e * e;
            }
        }
        total / n as f64
    }

    #[test]
    fn pure_noise_prefers_heavy_lasso_penalty() {
        let data = noise_data(60, 8, 5);
        let alg = RegressionAlgorithm::lasso(1.0).with_cv(5, vec![0.01, 10.0], 11);
        let chosen = cross_validate(&alg, &data).unwrap();
        let small = cv_error_oracle(&RegressionAlgorithm::lasso(0.01), &data, 5, 11);
        let large = cv_error_oracle(&RegressionAlgorithm::lasso(10.0), &data, 5, 11);
        assert!(large < small);
        assert_eq!(chosen, RegressionAlgorithm::lasso(10.0));
    }

    #[test]
    fn ties_favor_regularization() {
        // lasso penalties above lambda_max all give the constant fit
        let data = noise_data(30, 2, 9);
        let alg = RegressionAlgorithm::lasso(1.0).with_cv(3, vec![50.0, 100.0, 20.0], 3);
        assert_eq!(cross_validate(&alg, &data).unwrap(), RegressionAlgorithm::lasso(100.0));
        let alg = RegressionAlgorithm::stepwise(1).with_cv(3, vec![0.0, 0.0], 3);
        assert_eq!(cross_validate(&alg, &data).unwrap(), RegressionAlgorithm::stepwise(0));
    }

    #[test]
    fn deterministic_given_seed() {
        let data = noise_data(50, 5, 2);
        let alg = RegressionAlgorithm::ridge(1.0).with_cv(10, vec![0.01, 0.1, 1.0, 10.0], 8);
        assert_eq!(cross_validate(&alg, &data).unwrap(), cross_validate(&alg, &data).unwrap());
    }

    #[test]
    fn too_few_rows() {
        let data = noise_data(3, 1, 2);
        let alg = RegressionAlgorithm::ridge(1.0).with_cv(5, vec![0.1, 1.0], 8);
        assert!(cross_validate(&alg, &data).is_err());
    }
}
