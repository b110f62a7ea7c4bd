use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval on the extended real line. Either endpoint may be infinite.
///
/// The only interval with `lo > hi` is the canonical empty interval returned
/// by [`Interval::empty`] (and by intersections that do not overlap).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "ext_real")]
    pub lo: f64,
    #[serde(with = "ext_real")]
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidParameter(format!(
                "invalid interval [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// `[center - halfwidth, center + halfwidth]`; an infinite halfwidth
    /// gives the whole line.
    pub fn centered(center: f64, halfwidth: f64) -> Self {
        if halfwidth.is_infinite() {
            Self::whole_line()
        } else {
            Self {
                lo: center - halfwidth,
                hi: center + halfwidth,
            }
        }
    }

    pub fn whole_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn empty() -> Self {
        Self {
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn is_finite(&self) -> bool {
        !self.is_empty() && self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Length; zero for the empty interval, `+inf` for unbounded ones.
    pub fn length(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo > hi || self.is_empty() || other.is_empty() {
            Interval::empty()
        } else {
            Interval { lo, hi }
        }
    }

    /// `self ⊇ other`.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }
}

/// Output of full conformal prediction: the accepted trial values of a grid.
///
/// Each accepted grid point stands for the grid cell `[p - step/2, p + step/2]`
/// around it, which is what [`PredictionSet::contains`] and
/// [`PredictionSet::length`] measure. The convex hull of the accepted points is
/// the headline interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub points: Vec<f64>,
    pub hull: Interval,
    pub grid_step: f64,
    /// True when the accepted points do not form one run of consecutive grid
    /// points.
    pub non_contiguous: bool,
}

impl PredictionSet {
    /// `points` must be sorted, taken from a grid with spacing `grid_step`.
    pub fn from_grid_points(points: Vec<f64>, grid_step: f64) -> Self {
        let hull = match (points.first(), points.last()) {
            (Some(&lo), Some(&hi)) => Interval { lo, hi },
            _ => Interval::empty(),
        };
        let non_contiguous = points
            .windows(2)
            .any(|w| w[1] - w[0] > 1.5 * grid_step);
        Self {
            points,
            hull,
            grid_step,
            non_contiguous,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Whether `y` falls in the grid cell of an accepted point.
    pub fn contains(&self, y: f64) -> bool {
        let half = 0.5 * self.grid_step;
        let idx = self.points.partition_point(|&p| p + half < y);
        self.points.get(idx).is_some_and(|&p| p - half <= y)
    }

    /// Total length of the accepted grid cells.
    pub fn length(&self) -> f64 {
        self.points.len() as f64 * self.grid_step
    }

    /// Hull widened by half a grid cell on each side.
    pub fn cell_hull(&self) -> Interval {
        if self.is_empty() {
            Interval::empty()
        } else {
            Interval {
                lo: self.hull.lo - 0.5 * self.grid_step,
                hi: self.hull.hi + 0.5 * self.grid_step,
            }
        }
    }
}

/// Serde adapter writing infinite values as the strings `"inf"` / `"-inf"`
/// (JSON has no infinity).
pub mod ext_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&crate::data::format_real(*v))
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        #[derive(serde::Serialize, Deserialize)]
        struct Wrap(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&Wrap(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Wrap>::deserialize(d)?.into_iter().map(|w| w.0).collect())
        }
    }
}
