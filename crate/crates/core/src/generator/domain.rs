use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{QamError, Result};

/// Absolute floor for the open-endpoint clipping margin.
pub const TOL_DOMAIN: f64 = 1e-12;

/// A bounded real interval, each end open or closed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Domain {
    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(QamError::Domain(format!(
                "domain bounds must be finite, got ({lo}, {hi})"
            )));
        }
        if lo >= hi {
            return Err(QamError::Domain(format!("empty domain: {lo} >= {hi}")));
        }
        Ok(Domain {
            lo,
            hi,
            lo_open,
            hi_open,
        })
    }

    pub fn open(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, true, true)
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Distance kept from open endpoints.
    pub fn margin(&self) -> f64 {
        TOL_DOMAIN.max(self.width() * 1e-9)
    }

    /// Smallest point any operation samples.
    pub fn sample_lo(&self) -> f64 {
        if self.lo_open {
            self.lo + self.margin()
        } else {
            self.lo
        }
    }

    /// Largest point any operation samples.
    pub fn sample_hi(&self) -> f64 {
        if self.hi_open {
            self.hi - self.margin()
        } else {
            self.hi
        }
    }

    pub fn sample_width(&self) -> f64 {
        self.sample_hi() - self.sample_lo()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.sample_lo() && x <= self.sample_hi()
    }

    /// Strictly inside the sampling range.
    pub fn contains_interior(&self, x: f64) -> bool {
        x > self.sample_lo() && x < self.sample_hi()
    }

    pub fn check(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(QamError::Domain(format!("x = {x} lies outside {self}")))
        }
    }

    /// Left part `[lo, cut]`, closed at the cut.
    pub(crate) fn left_of(&self, cut: f64) -> Domain {
        Domain {
            lo: self.lo,
            hi: cut,
            lo_open: self.lo_open,
            hi_open: false,
        }
    }

    pub(crate) fn right_of(&self, cut: f64) -> Domain {
        Domain {
            lo: cut,
            hi: self.hi,
            lo_open: false,
            hi_open: self.hi_open,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{},{}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

/// Parses `(lo,hi]`-style text; missing brackets mean an open end.
pub(crate) fn parse_bracketed(text: &str) -> Result<(f64, f64, bool, bool)> {
    let t = text.trim();
    let err = |msg: &str| QamError::Parse {
        pos: 0,
        msg: format!("{msg} in interval {text:?}"),
    };
    let (lo_open, rest) = match t.chars().next() {
        Some('(') => (true, &t[1..]),
        Some('[') => (false, &t[1..]),
        _ => (true, t),
    };
    let (hi_open, body) = match rest.chars().last() {
        Some(')') => (true, &rest[..rest.len() - 1]),
        Some(']') => (false, &rest[..rest.len() - 1]),
        _ => (true, rest),
    };
    let mut parts = body.split(',');
    let lo = parts.next().ok_or_else(|| err("missing lower bound"))?;
    let hi = parts.next().ok_or_else(|| err("missing upper bound"))?;
    if parts.next().is_some() {
        return Err(err("too many bounds"));
    }
    let num = |s: &str| -> Result<f64> {
        let s = s.trim();
        match s {
            "inf" | "+inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            _ => s.parse::<f64>().map_err(|_| err("bad number")),
        }
    };
    Ok((num(lo)?, num(hi)?, lo_open, hi_open))
}

impl FromStr for Domain {
    type Err = QamError;

    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi, lo_open, hi_open) = parse_bracketed(s)?;
        Domain::new(lo, hi, lo_open, hi_open)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_mixed_brackets() {
        let d: Domain = "(0,10]".parse().unwrap();
        assert_eq!(d, Domain::new(0.0, 10.0, true, false).unwrap());
        let d: Domain = "[-1, 1)".parse().unwrap();
        assert!(!d.lo_open && d.hi_open);
        assert_eq!(d.to_string(), "[-1,1)");
    }

    #[test]
    fn open_ends_are_clipped() {
        let d = Domain::open(0.0, 10.0).unwrap();
        assert_eq!(d.margin(), 1e-8);
        assert!(!d.contains(0.0));
        assert!(d.contains(1e-8));
        let c = Domain::closed(0.0, 10.0).unwrap();
        assert!(c.contains(0.0) && c.contains(10.0));
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(matches!(Domain::open(1.0, 1.0), Err(QamError::Domain(_))));
        assert!("(0,inf)".parse::<Domain>().is_err());
        assert!("(0;1)".parse::<Domain>().is_err());
    }
}
