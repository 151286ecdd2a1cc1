//! Extended reals and intervals of the extended real line.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A point of `[-inf, +inf]`. NaN is not representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps an `f64` onto the extended line. Returns `None` for NaN.
    pub fn new(x: f64) -> Option<Self> {
        if x.is_nan() {
            None
        } else if x == f64::INFINITY {
            Some(ExtReal::PosInf)
        } else if x == f64::NEG_INFINITY {
            Some(ExtReal::NegInf)
        } else {
            Some(ExtReal::Finite(x))
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }
}

impl From<f64> for ExtReal {
    /// Panics on NaN.
    fn from(x: f64) -> Self {
        ExtReal::new(x).expect("NaN is not an extended real")
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        // finite values are never NaN, so total_cmp agrees with the usual order
        // except for -0.0 < 0.0, which we do not want
        let (a, b) = (self.to_f64(), other.to_f64());
        if a == b {
            Ordering::Equal
        } else {
            a.total_cmp(&b)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::PosInf => write!(f, "inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::NegInf => s.serialize_str("-inf"),
            ExtReal::PosInf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => ExtReal::new(x).ok_or_else(|| serde::de::Error::custom("NaN")),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" | "Infinity" | "+Infinity" => Ok(ExtReal::PosInf),
                "-inf" | "-Infinity" => Ok(ExtReal::NegInf),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntervalError {
    #[error("interval lower end {lo} exceeds upper end {hi}")]
    Reversed { lo: ExtReal, hi: ExtReal },
    #[error("infinite endpoint {0} cannot be closed")]
    ClosedInfinite(ExtReal),
    #[error("degenerate interval at {0} must be closed at both ends")]
    EmptyDegenerate(ExtReal),
}

/// A connected subset of the real line, possibly unbounded, with endpoint
/// inclusion flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: ExtReal,
    pub hi: ExtReal,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: ExtReal, hi: ExtReal, lo_closed: bool, hi_closed: bool) -> Result<Self, IntervalError> {
        if lo > hi {
            return Err(IntervalError::Reversed { lo, hi });
        }
        if lo_closed && !lo.is_finite() {
            return Err(IntervalError::ClosedInfinite(lo));
        }
        if hi_closed && !hi.is_finite() {
            return Err(IntervalError::ClosedInfinite(hi));
        }
        if lo == hi && !(lo_closed && hi_closed) {
            return Err(IntervalError::EmptyDegenerate(lo));
        }
        Ok(Self { lo, hi, lo_closed, hi_closed })
    }

    pub fn real_line() -> Self {
        Self { lo: ExtReal::NegInf, hi: ExtReal::PosInf, lo_closed: false, hi_closed: false }
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        Self::new(lo.into(), hi.into(), true, true)
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        Self::new(lo.into(), hi.into(), false, false)
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x.into(), hi: x.into(), lo_closed: true, hi_closed: true }
    }

    pub fn contains(&self, t: ExtReal) -> bool {
        let above = match t.cmp(&self.lo) {
            Ordering::Greater => true,
            Ordering::Equal => self.lo_closed,
            Ordering::Less => false,
        };
        let below = match t.cmp(&self.hi) {
            Ordering::Less => true,
            Ordering::Equal => self.hi_closed,
            Ordering::Greater => false,
        };
        above && below
    }

    pub fn contains_f64(&self, t: f64) -> bool {
        ExtReal::new(t).is_some_and(|t| self.contains(t))
    }

    /// Interior membership, ignoring the endpoint flags.
    pub fn interior_contains(&self, t: f64) -> bool {
        let t = ExtReal::from(t);
        self.lo < t && t < self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn is_open(&self) -> bool {
        !self.lo_closed && !self.hi_closed
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_total() {
        let mut xs = vec![ExtReal::PosInf, ExtReal::Finite(1.0), ExtReal::NegInf, ExtReal::Finite(-3.0)];
        xs.sort();
        assert_eq!(
            xs,
            vec![ExtReal::NegInf, ExtReal::Finite(-3.0), ExtReal::Finite(1.0), ExtReal::PosInf]
        );
        assert_eq!(ExtReal::Finite(-0.0), ExtReal::Finite(0.0));
        assert_eq!(ExtReal::Finite(-0.0).cmp(&ExtReal::Finite(0.0)), Ordering::Equal);
    }

    #[test]
    fn infinite_endpoints_never_closed() {
        assert!(Interval::new(ExtReal::NegInf, 0.0.into(), true, false).is_err());
        assert!(Interval::new(1.0.into(), 0.0.into(), false, false).is_err());
        assert!(Interval::new(1.0.into(), 1.0.into(), true, false).is_err());
    }

    #[test]
    fn membership_follows_flags() {
        let i = Interval::new((-1.0).into(), 3.0.into(), false, true).unwrap();
        assert!(!i.contains_f64(-1.0));
        assert!(i.contains_f64(3.0));
        assert!(i.contains_f64(0.0));
        assert!(!i.contains_f64(3.5));
        assert!(Interval::real_line().contains_f64(1e300));
        assert!(!Interval::real_line().contains(ExtReal::PosInf));
    }

    #[test]
    fn serde_accepts_infinity_strings() {
        let i: Interval =
            serde_json::from_str(r#"{"lo":"-inf","hi":2.5,"lo_closed":false,"hi_closed":true}"#).unwrap();
        assert_eq!(i.lo, ExtReal::NegInf);
        assert_eq!(i.hi, ExtReal::Finite(2.5));
    }
}
