//! Constructive incomparability witnesses.
//!
//! At a point `x0` both generators are rescaled to vanish at `x0`, with the
//! first taking value 2 and the second value 1 at `x1 = x0 + eps`. When the
//! first one starts below the second (e.g. it has a vanishing one-sided
//! derivative while the other does not), the graphs cross at a first point
//! `xi` between `x0` and `x1`, and the half-weight means of `(x0, xi)` are
//! strictly ordered. Doing this on both sides of `x0` yields samples that
//! violate each direction of the order.

use super::{relative_gap, require_common_domain};
use crate::error::{QamError, Result};
use crate::generator::Generator;
use crate::means::WeightedSample;
use crate::numeric::linspace;
use crate::settings::Settings;

const SCAN_POINTS: usize = 1024;
const EPS_LEVELS: usize = 8;

/// First point in `(x0, x1]` (walking away from `x0`) where `lead` overtakes
/// `trail` after both are pinned at `x0` and `x1`.
fn first_crossing(lead: &Generator, trail: &Generator, x0: f64, x1: f64) -> Option<f64> {
    let (l0, l1) = (lead.eval_unchecked(x0), lead.eval_unchecked(x1));
    let (t0, t1) = (trail.eval_unchecked(x0), trail.eval_unchecked(x1));
    let gap = |x: f64| {
        2.0 * (lead.eval_unchecked(x) - l0) / (l1 - l0) - (trail.eval_unchecked(x) - t0) / (t1 - t0)
    };
    let ts = linspace(x0, x1, SCAN_POINTS + 1);
    if !(gap(ts[1]) < 0.0) {
        return None;
    }
    let k = (2..ts.len()).find(|&k| gap(ts[k]) >= 0.0)?;
    let (mut a, mut b) = (ts[k - 1], ts[k]);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        if gap(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(b)
}

/// Returns `(s_plus, s_minus)` with `A[f](s_plus) > A[g](s_plus)` and
/// `A[f](s_minus) < A[g](s_minus)`, both half-weight samples `(x0, xi)`.
pub fn find_incomparability_witness(f: &Generator, g: &Generator, x0: f64, settings: &Settings) -> Result<(WeightedSample, WeightedSample)> {
    require_common_domain(f, g)?;
    let d = *f.domain();
    d.check(x0)?;
    let (cf, cg) = (f.canonicalize(), g.canonicalize());
    let thr = settings.tol.refute_threshold();

    let mut plus: Option<(f64, WeightedSample)> = None;
    let mut minus: Option<(f64, WeightedSample)> = None;
    for room in [d.sample_hi() - x0, -(x0 - d.sample_lo())] {
        if room == 0.0 {
            continue;
        }
        for level in 0..EPS_LEVELS {
            let x1 = x0 + room * 0.5f64.powi(level as i32);
            if x1 == x0 {
                break;
            }
            for (lead, trail) in [(&cf, &cg), (&cg, &cf)] {
                let Some(xi) = first_crossing(lead, trail, x0, x1) else {
                    continue;
                };
                let s = WeightedSample::uniform(vec![x0, xi])?;
                let gap = relative_gap(f, g, &s)?;
                let slot = if gap > 0.0 { &mut plus } else { &mut minus };
                if gap.abs() > thr && slot.as_ref().map_or(true, |(best, _)| gap.abs() > *best) {
                    *slot = Some((gap.abs(), s));
                }
            }
        }
    }
    match (plus, minus) {
        (Some((_, p)), Some((_, m))) => Ok((p, m)),
        (p, m) => Err(QamError::NoWitnessFound(format!(
            "at x0 = {x0}: {} for A[f] > A[g], {} for A[f] < A[g]",
            if p.is_some() { "found" } else { "none" },
            if m.is_some() { "found" } else { "none" },
        ))),
    }
}
