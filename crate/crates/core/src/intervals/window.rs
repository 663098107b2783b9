use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::envelope::verify_sandwich;
use crate::comparison::{compare, mikusinski_index, Relation};
use crate::error::{QamError, Result};
use crate::generator::{parse_bracketed, Generator, GeneratorExpr};
use crate::numeric::linspace;
use crate::settings::Settings;

/// Base point `x0` and an interval `U` of admissible index values `f''(x0)/f'(x0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MikusinskiWindow {
    pub x0: f64,
    pub u_lo: f64,
    pub u_hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl MikusinskiWindow {
    pub fn new(x0: f64, u_lo: f64, u_hi: f64, lo_open: bool, hi_open: bool) -> Result<Self> {
        if !x0.is_finite() || u_lo.is_nan() || u_hi.is_nan() || u_lo > u_hi {
            return Err(QamError::InvalidParameter(format!("bad window x0 = {x0}, U = [{u_lo}, {u_hi}]")));
        }
        Ok(MikusinskiWindow {
            x0,
            u_lo,
            u_hi,
            lo_open,
            hi_open,
        })
    }

    pub fn closed(x0: f64, u_lo: f64, u_hi: f64) -> Result<Self> {
        Self::new(x0, u_lo, u_hi, false, false)
    }

    /// Parses `U` in bracket notation, e.g. `"[0,2)"` or `"(-inf,1]"`.
    pub fn parse(x0: f64, u: &str) -> Result<Self> {
        let (lo, hi, lo_open, hi_open) = parse_bracketed(u)?;
        Self::new(x0, lo, hi, lo_open, hi_open)
    }

    pub fn admits(&self, v: f64) -> bool {
        let above = if self.lo_open { v > self.u_lo } else { v >= self.u_lo };
        let below = if self.hi_open { v < self.u_hi } else { v <= self.u_hi };
        above && below
    }
}

impl fmt::Display for MikusinskiWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "x0={} U={}{},{}{}",
            self.x0,
            if self.lo_open { '(' } else { '[' },
            self.u_lo,
            self.u_hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

impl FromStr for MikusinskiWindow {
    type Err = QamError;

    /// `x0@U`, e.g. `1@[0,2]`.
    fn from_str(s: &str) -> Result<Self> {
        let (x0, u) = s.split_once('@').ok_or_else(|| QamError::Parse {
            pos: 0,
            msg: format!("expected x0@U, got {s:?}"),
        })?;
        let x0 = x0.trim().parse::<f64>().map_err(|_| QamError::Parse {
            pos: 0,
            msg: format!("bad x0 in {s:?}"),
        })?;
        Self::parse(x0, u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WindowMembership {
    Member,
    NotMember,
    /// The generator is not twice differentiable at `x0` or `f'(x0) = 0`.
    NotApplicable,
}

/// Whether `A[f]` lies in the window: `f` is C^2 near `x0`, `f'(x0) != 0`
/// and the index at `x0` is in `U`.
pub fn window_membership(f: &Generator, w: &MikusinskiWindow) -> Result<WindowMembership> {
    if !f.domain().contains_interior(w.x0) {
        return Err(QamError::Domain(format!("window point {} is not inside {}", w.x0, f.domain())));
    }
    match mikusinski_index(f, w.x0) {
        Ok(v) if w.admits(v) => Ok(WindowMembership::Member),
        Ok(_) => Ok(WindowMembership::NotMember),
        Err(QamError::NotDifferentiable(_) | QamError::ZeroDerivative(_)) => Ok(WindowMembership::NotApplicable),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HullMembership {
    /// `A[exp(lambda_lo)] <= A[h] <= A[exp(lambda_hi)]` with both rates in `U`.
    Member { lambda_lo: f64, lambda_hi: f64 },
    /// No exponential bracket found; membership is not decided.
    Unknown,
}

/// Generator of constant index `lambda`: `e^(lambda x)`, or the identity at 0.
pub fn exponential_family(lambda: f64) -> GeneratorExpr {
    if lambda == 0.0 {
        GeneratorExpr::Identity
    } else {
        GeneratorExpr::Exp(lambda)
    }
}

const CANDIDATES: usize = 64;
const ENDPOINT_STEPS: usize = 8;

fn candidate_rates(lo: f64, hi: f64) -> Vec<f64> {
    if lo == hi {
        return vec![lo];
    }
    let mut c = linspace(lo, hi, CANDIDATES - 2 * ENDPOINT_STEPS);
    let w = hi - lo;
    for k in 1..=ENDPOINT_STEPS {
        let t = w * 0.5f64.powi(k as i32 + 4);
        c.push(lo + t);
        c.push(hi - t);
    }
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Searches exponential generators with rates in `U` that bracket `A[h]`.
pub fn hull_membership_exponential(h: &Generator, w: &MikusinskiWindow, settings: &Settings) -> Result<HullMembership> {
    let d = *h.domain();
    d.check(w.x0)?;
    // e^(lambda x) overflows beyond this rate on the domain.
    let reach = 700.0 / d.sample_lo().abs().max(d.sample_hi().abs()).max(1e-300);
    let nudge = |v: f64| 1e-9 * v.abs().max(1.0);
    let mut lo = w.u_lo.max(-reach);
    let mut hi = w.u_hi.min(reach);
    if w.lo_open && lo == w.u_lo {
        lo += nudge(lo);
    }
    if w.hi_open && hi == w.u_hi {
        hi -= nudge(hi);
    }
    if !(lo <= hi) {
        return Ok(HullMembership::Unknown);
    }
    let rates = candidate_rates(lo, hi);

    let family = |l: f64| Generator::with_settings(exponential_family(l), d, settings).ok();
    let below = |l: f64| {
        family(l).map_or(false, |e| {
            matches!(compare(&e, h, settings).map(|v| v.relation), Ok(Relation::Less | Relation::Equal))
        })
    };
    let above = |l: f64| {
        family(l).map_or(false, |e| {
            matches!(compare(h, &e, settings).map(|v| v.relation), Ok(Relation::Less | Relation::Equal))
        })
    };

    // Feasible lower rates form a down-set, feasible upper rates an up-set.
    let mut lower: Vec<f64> = Vec::new();
    for (i, &l) in rates.iter().enumerate() {
        if !below(l) {
            if let Some(&last) = lower.last() {
                let mid = 0.5 * (last + rates[i]);
                if below(mid) {
                    lower.push(mid);
                }
            }
            break;
        }
        lower.push(l);
    }
    let mut upper: Vec<f64> = Vec::new();
    for (i, &l) in rates.iter().enumerate().rev() {
        if !above(l) {
            if let Some(&last) = upper.last() {
                let mid = 0.5 * (last + rates[i]);
                if above(mid) {
                    upper.push(mid);
                }
            }
            break;
        }
        upper.push(l);
    }

    // Tightest certificate first; back off when direct verification disagrees.
    for (l1, l2) in lower.iter().rev().zip(upper.iter().rev()).take(4) {
        if l1 > l2 {
            continue;
        }
        let (Some(e1), Some(e2)) = (family(*l1), family(*l2)) else {
            continue;
        };
        if verify_sandwich(&e1, h, &e2, settings)?.passed {
            return Ok(HullMembership::Member {
                lambda_lo: *l1,
                lambda_hi: *l2,
            });
        }
    }
    Ok(HullMembership::Unknown)
}
