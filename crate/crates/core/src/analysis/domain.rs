use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned open box `(lo_1, hi_1) x ... x (lo_N, hi_N)`.
///
/// Textual form is `(a,b)x(c,d)x...`; it round-trips through
/// [`FromStr`] and [`fmt::Display`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BoxDomain {
    intervals: Vec<(f64, f64)>,
}

impl BoxDomain {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidDomain("box needs at least one interval".into()));
        }
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) {
                return Err(Error::InvalidDomain(format!("interval {} is not finite", i + 1)));
            }
            if lo >= hi {
                return Err(Error::InvalidDomain(format!(
                    "interval {} has lo >= hi ({lo} >= {hi})",
                    i + 1
                )));
            }
        }
        Ok(BoxDomain { intervals })
    }

    /// `(lo, hi)^n`
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi); n])
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.intervals[i].0
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.intervals[i].1
    }

    pub fn width(&self, i: usize) -> f64 {
        self.intervals[i].1 - self.intervals[i].0
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.intervals.iter().map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.intervals.iter().zip(x).all(|(&(l, h), &v)| v > l && v < h)
    }

    pub fn contains_closed(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.intervals.iter().zip(x).all(|(&(l, h), &v)| v >= l && v <= h)
    }

    /// Signed distance to the nearest face: positive inside, negative
    /// outside the closed box (per-coordinate minimum).
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.intervals
            .iter()
            .zip(x)
            .map(|(&(l, h), &v)| (v - l).min(h - v))
            .fold(f64::INFINITY, f64::min)
    }
}

impl fmt::Display for BoxDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (lo, hi)) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, "x")?;
            }
            write!(f, "({lo},{hi})")?;
        }
        Ok(())
    }
}

impl FromStr for BoxDomain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidDomain(format!("{msg} in `{s}`; expected e.g. \"(-1,1)x(-2,2)\""));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut rest = compact.as_str();
        let mut intervals = Vec::new();
        loop {
            rest = rest.strip_prefix('(').ok_or_else(|| bad("missing `(`"))?;
            let close = rest.find(')').ok_or_else(|| bad("missing `)`"))?;
            let (body, tail) = rest.split_at(close);
            let (lo, hi) = body.split_once(',').ok_or_else(|| bad("missing `,`"))?;
            let lo: f64 = lo.parse().map_err(|_| bad("malformed lower bound"))?;
            let hi: f64 = hi.parse().map_err(|_| bad("malformed upper bound"))?;
            intervals.push((lo, hi));
            rest = &tail[1..];
            if rest.is_empty() {
                break;
            }
            rest = rest
                .strip_prefix('x')
                .or_else(|| rest.strip_prefix('×'))
                .ok_or_else(|| bad("expected `x` between intervals"))?;
        }
        BoxDomain::new(intervals)
    }
}

impl TryFrom<String> for BoxDomain {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<BoxDomain> for String {
    fn from(b: BoxDomain) -> String {
        b.to_string()
    }
}
