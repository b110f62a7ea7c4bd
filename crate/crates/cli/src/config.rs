use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use conformal_core::data::DataSet;
use conformal_core::estimators::RegressionAlgorithm;

use crate::error::{CliError, CliResult};

/// Flat `key = value` file. Blank lines and lines starting with `#` are
/// ignored; keys may use `-` or `_`.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "estimator",
    "mad_estimator",
    "variant",
    "score",
    "seed",
    "ratio",
    "grid_lo",
    "grid_hi",
    "grid_n",
    "splits",
    "reps",
    "experiment",
    "out",
    "scale",
    "local",
    "columns",
    "select",
    "folds",
    "timing",
];

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            line: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CliError::Config { line: i + 1, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if values.insert(key.clone(), value.trim().to_owned()).is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { values })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>().map_err(|e| CliError::Config {
                    line: 0,
                    message: format!("bad value `{v}` for `{key}`: {e}"),
                })
            })
            .transpose()
    }

    /// Command-line value if given, else the file value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.get(key)?.unwrap_or(default),
        })
    }

    pub fn pick_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => Some(v),
            None => self.get(key)?,
        })
    }
}

/// Base estimator as written on the command line, e.g. `ridge:0.1`.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    Fixed(RegressionAlgorithm),
    /// Lasso with the penalty chosen by `folds`-fold CV on the training data.
    LassoCv { folds: usize },
}

impl EstimatorSpec {
    pub fn build(&self, data: &DataSet, seed: u64) -> CliResult<RegressionAlgorithm> {
        let alg = match self {
            EstimatorSpec::Fixed(alg) => alg.clone(),
            EstimatorSpec::LassoCv { folds } => RegressionAlgorithm::lasso_cv(data, *folds, seed),
        };
        alg.validate()?;
        Ok(alg)
    }
}

impl FromStr for EstimatorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut parts = s.trim().split(':');
        let name = parts.next().unwrap_or_default().to_ascii_lowercase();
        let args: Vec<&str> = parts.collect();
        let num = |i: usize| -> Result<f64, String> {
            let a = args.get(i).ok_or_else(|| format!("`{name}` needs {} parameter(s)", i + 1))?;
            a.parse::<f64>().map_err(|_| format!("cannot parse `{a}` as a number"))
        };
        let count = |i: usize| -> Result<usize, String> {
            let a = args.get(i).ok_or_else(|| format!("`{name}` needs {} parameter(s)", i + 1))?;
            a.parse::<usize>().map_err(|_| format!("cannot parse `{a}` as a count"))
        };
        let expect = |k: usize| {
            if args.len() > k {
                Err(format!("`{name}` takes {k} parameter(s), got {}", args.len()))
            } else {
                Ok(())
            }
        };
        let alg = match name.as_str() {
            "zero" => {
                expect(0)?;
                RegressionAlgorithm::zero()
            }
            "ols" => {
                expect(0)?;
                RegressionAlgorithm::ols()
            }
            "ridge" => {
                expect(1)?;
                RegressionAlgorithm::ridge(num(0)?)
            }
            "lasso" => {
                expect(1)?;
                RegressionAlgorithm::lasso(num(0)?)
            }
            "lasso_cv" => {
                expect(1)?;
                let folds = if args.is_empty() { 10 } else { count(0)? };
                return Ok(EstimatorSpec::LassoCv { folds });
            }
            "elastic_net" => {
                expect(2)?;
                RegressionAlgorithm::elastic_net(num(0)?, num(1)?)
            }
            "stepwise" => {
                expect(1)?;
                RegressionAlgorithm::stepwise(count(0)?)
            }
            "kernel" | "kernel_smoother" => {
                expect(1)?;
                RegressionAlgorithm::kernel_smoother(num(0)?)
            }
            "bspline" | "bspline_additive" => {
                expect(1)?;
                RegressionAlgorithm::bspline_additive(count(0)?)
            }
            other => return Err(format!("unknown estimator `{other}`")),
        };
        alg.validate().map_err(|e| e.to_string())?;
        Ok(EstimatorSpec::Fixed(alg))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariantChoice {
    Full,
    Split,
    Multi,
    Jackknife,
    Naive,
    Roo,
    RooRelaxed,
}

impl VariantChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            VariantChoice::Full => "full",
            VariantChoice::Split => "split",
            VariantChoice::Multi => "multi_split",
            VariantChoice::Jackknife => "jackknife",
            VariantChoice::Naive => "naive",
            VariantChoice::Roo => "roo",
            VariantChoice::RooRelaxed => "roo_relaxed",
        }
    }
}

impl FromStr for VariantChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "full" => VariantChoice::Full,
            "split" => VariantChoice::Split,
            "multi" | "multi_split" => VariantChoice::Multi,
            "jackknife" => VariantChoice::Jackknife,
            "naive" => VariantChoice::Naive,
            "roo" => VariantChoice::Roo,
            "roo_relaxed" => VariantChoice::RooRelaxed,
            other => return Err(format!("unknown variant `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreChoice {
    Absolute,
    Weighted,
}

impl FromStr for ScoreChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "absolute" | "abs" => ScoreChoice::Absolute,
            "weighted" | "locally_weighted" => ScoreChoice::Weighted,
            other => return Err(format!("unknown score `{other}`")),
        })
    }
}

/// Comma-separated 1-based covariate numbers (`1,3,4`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Columns(pub Vec<usize>);

impl FromStr for Columns {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|t| {
                let t = t.trim().trim_start_matches('x');
                match t.parse::<usize>() {
                    Ok(j) if j >= 1 => Ok(j - 1),
                    _ => Err(format!("bad column `{t}` (columns are numbered from 1)")),
                }
            })
            .collect::<Result<_, _>>()
            .map(Columns)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_specs() {
        assert_eq!("ols".parse::<EstimatorSpec>().unwrap(), EstimatorSpec::Fixed(RegressionAlgorithm::ols()));
        assert_eq!(
            "elastic_net:0.1:0.5".parse::<EstimatorSpec>().unwrap(),
            EstimatorSpec::Fixed(RegressionAlgorithm::elastic_net(0.1, 0.5))
        );
        assert_eq!("lasso_cv".parse::<EstimatorSpec>().unwrap(), EstimatorSpec::LassoCv { folds: 10 });
        assert!("ridge".parse::<EstimatorSpec>().is_err());
        assert!("ridge:-1".parse::<EstimatorSpec>().is_err());
        assert!("ols:3".parse::<EstimatorSpec>().is_err());
        assert!("forest".parse::<EstimatorSpec>().is_err());
    }

    #[test]
    fn config_file_lines() {
        let cfg = FileConfig::parse("# comment\nalpha = 0.2\n\ngrid-n=50\n").unwrap();
        assert_eq!(cfg.get::<f64>("alpha").unwrap(), Some(0.2));
        assert_eq!(cfg.get::<usize>("grid_n").unwrap(), Some(50));
        assert_eq!(cfg.pick(Some(0.1), "alpha", 0.3).unwrap(), 0.1);
        assert_eq!(cfg.pick(None, "seed", 7u64).unwrap(), 7);
        match FileConfig::parse("alpha = 0.1\nbogus = 1\n") {
            Err(CliError::Config { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(FileConfig::parse("alpha 0.1").is_err());
    }

    #[test]
    fn columns_are_one_based() {
        assert_eq!("1, x3".parse::<Columns>().unwrap(), Columns(vec![0, 2]));
        assert!("0".parse::<Columns>().is_err());
    }
}
