//! Core data types: the regression data set, miscoverage level and split
//! configuration, plus the plain-text CSV format used to exchange data sets.
//!
//! The CSV format has a header row `x1,...,xd,y` followed by one row per
//! observation. Query files (points at which bands are evaluated) use the same
//! layout without the `y` column.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Feature matrix (n x d) plus response vector (length n).
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    x: DMatrix<f64>,
    y: DVector<f64>,
}

impl DataSet {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::InvalidData(format!(
                "feature matrix has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::EmptySample);
        }
        if x.ncols() == 0 {
            return Err(Error::InvalidData("data set needs at least one feature".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry".into()));
        }
        Ok(Self { x, y })
    }

    /// Builds a data set from row-major feature rows.
    pub fn from_rows(rows: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        let d = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        Self::new(x, DVector::from_column_slice(y))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.x.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.row(i)).collect()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> DataSet {
        let x = self.x.select_rows(indices);
        let y = self.y.select_rows(indices);
        DataSet { x, y }
    }

    /// All rows except row `i`.
    pub fn without_row(&self, i: usize) -> Result<DataSet> {
        if self.n() < 2 {
            return Err(Error::EmptySample);
        }
        let keep: Vec<usize> = (0..self.n()).filter(|&k| k != i).collect();
        Ok(self.subset(&keep))
    }

    /// Drops feature column `j`.
    pub fn without_column(&self, j: usize) -> Result<DataSet> {
        if j >= self.d() {
            return Err(Error::InvalidParameter(format!(
                "column {j} out of range for {} features",
                self.d()
            )));
        }
        if self.d() < 2 {
            return Err(Error::InvalidParameter(
                "cannot drop the only feature column".into(),
            ));
        }
        Ok(DataSet {
            x: self.x.clone().remove_column(j),
            y: self.y.clone(),
        })
    }

    /// Appends the observation `(x, y)`.
    pub fn augmented(&self, x: &[f64], y: f64) -> Result<DataSet> {
        self.check_dim(x)?;
        let n = self.n();
        let mut xa = self.x.clone().insert_row(n, 0.0);
        for (j, v) in x.iter().enumerate() {
            xa[(n, j)] = *v;
        }
        let ya = self.y.clone().push(y);
        Ok(DataSet { x: xa, y: ya })
    }

    /// Same features, different response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<DataSet> {
        if y.len() != self.n() {
            return Err(Error::InvalidData("response length mismatch".into()));
        }
        Ok(DataSet {
            x: self.x.clone(),
            y,
        })
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let (header, rows) = read_numeric_csv(reader)?;
        let d = header.len().checked_sub(1).filter(|&d| d >= 1).ok_or(Error::Csv {
            line: 1,
            message: "expected header x1,...,xd,y".into(),
        })?;
        if header.last().map(|h| h.trim()) != Some("y") {
            return Err(Error::Csv {
                line: 1,
                message: "last column must be named `y`".into(),
            });
        }
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        let x = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r[d]));
        DataSet::new(x, y)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.d()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec: Vec<String> = self.x.row(i).iter().map(|v| format_real(*v)).collect();
            rec.push(format_real(self.y[i]));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads a header-only-features CSV (`x1,...,xd`) of query points.
pub fn read_query_csv<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let (header, rows) = read_numeric_csv(reader)?;
    if header.is_empty() {
        return Err(Error::Csv {
            line: 1,
            message: "empty header".into(),
        });
    }
    Ok(rows)
}

fn read_numeric_csv<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != header.len() {
            return Err(Error::Csv {
                line,
                message: format!("expected {} fields, found {}", header.len(), rec.len()),
            });
        }
        let row = rec
            .iter()
            .map(|field| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Csv {
                    line,
                    message: format!("cannot parse `{field}` as a finite number"),
                }),
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

/// Shortest round-trip decimal text; infinities as `inf` / `-inf`.
pub fn format_real(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

/// Nominal miscoverage level, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MiscoverageLevel(f64);

impl MiscoverageLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha < 1.0 {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidAlpha(alpha))
        }
    }

    pub fn alpha(self) -> f64 {
        self.0
    }

    /// The level obtained by splitting the budget evenly over `parts` events.
    pub fn bonferroni(self, parts: usize) -> Self {
        Self(self.0 / parts.max(1) as f64)
    }
}

impl TryFrom<f64> for MiscoverageLevel {
    type Error = Error;
    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

impl From<MiscoverageLevel> for f64 {
    fn from(level: MiscoverageLevel) -> f64 {
        level.0
    }
}

/// Random two-fold split: `ratio` is the fraction assigned to the fitting fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub seed: u64,
    pub ratio: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { seed: 0, ratio: 0.5 }
    }
}

impl SplitConfig {
    pub fn new(seed: u64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "split ratio must lie in (0, 1), got {ratio}"
            )));
        }
        Ok(Self { seed, ratio })
    }

    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ratio: 0.5 }
    }
}

/// Splits `0..n` into a fitting fold of size `floor(ratio * n)` and a
/// calibration fold holding the rest. Both folds are returned sorted.
pub fn split_indices(n: usize, cfg: &SplitConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 observations to split, got {n}"
        )));
    }
    let cfg = SplitConfig::new(cfg.seed, cfg.ratio)?;
    let n1 = (cfg.ratio * n as f64).floor() as usize;
    if n1 == 0 || n1 == n {
        return Err(Error::InvalidParameter(format!(
            "split ratio {} leaves an empty fold for n = {n}",
            cfg.ratio
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng::seeded(cfg.seed));
    let mut first = perm[..n1].to_vec();
    let mut second = perm[n1..].to_vec();
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}
