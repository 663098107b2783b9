use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comparison::{compare, require_common_domain, Relation};
use crate::error::{QamError, Result};
use crate::generator::Generator;
use crate::means::{quasi_mean, WeightedSample};
use crate::numeric::linspace;
use crate::settings::Settings;

/// Samples per envelope segment.
pub const ENVELOPE_POINTS: usize = 513;

const STREAM_PINS: u64 = 3;
const STREAM_SANDWICH: u64 = 4;

/// `h` rescaled so that it is 0 at `x0` and 1 at `x1`.
pub fn normalized(h: &Generator, x0: f64, x1: f64, x: f64) -> f64 {
    let (h0, h1) = (h.eval_unchecked(x0), h.eval_unchecked(x1));
    (h.eval_unchecked(x) - h0) / (h1 - h0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeSegment {
    pub xs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl EnvelopeSegment {
    fn bounds_at(&self, x: f64) -> Option<(f64, f64)> {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return None;
        }
        let k = self.xs.partition_point(|&t| t <= x).clamp(1, n - 1);
        let (a, b) = (self.xs[k - 1], self.xs[k]);
        let t = if b > a { (x - a) / (b - a) } else { 0.0 };
        let lerp = |v: &[f64]| v[k - 1] + t * (v[k] - v[k - 1]);
        Some((lerp(&self.lower), lerp(&self.upper)))
    }
}

/// Bounds on every `h` with `A[f] <= A[h] <= A[g]` after pinning `h(x0) = 0`,
/// `h(x1) = 1`: between the pins the normalized `g` is below and the
/// normalized `f` above; beyond `x1` the roles swap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Envelope {
    pub x0: f64,
    pub x1: f64,
    /// Samples on `[x0, x1]`.
    pub inner: EnvelopeSegment,
    /// Samples on `[x1, end of domain]`, when there is room.
    pub outer: Option<EnvelopeSegment>,
}

/// One CSV row of an envelope with a middle generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeRow {
    pub x: f64,
    pub lower: f64,
    pub upper: f64,
    pub h_normalized: f64,
}

impl Envelope {
    fn build(f: &Generator, g: &Generator, x0: f64, x1: f64) -> Envelope {
        let segment = |a: f64, b: f64, swap: bool| {
            let xs = linspace(a, b, ENVELOPE_POINTS);
            let nf: Vec<f64> = xs.iter().map(|&x| normalized(f, x0, x1, x)).collect();
            let ng: Vec<f64> = xs.iter().map(|&x| normalized(g, x0, x1, x)).collect();
            let (lower, upper) = if swap { (nf, ng) } else { (ng, nf) };
            EnvelopeSegment { xs, lower, upper }
        };
        let mut inner = segment(x0, x1, false);
        let last = ENVELOPE_POINTS - 1;
        inner.lower[0] = 0.0;
        inner.upper[0] = 0.0;
        inner.lower[last] = 1.0;
        inner.upper[last] = 1.0;
        let end = f.domain().sample_hi();
        let outer = (end > x1).then(|| segment(x1, end, true));
        Envelope { x0, x1, inner, outer }
    }

    /// Interpolated `(lower, upper)` at `x`, if `x` is covered.
    pub fn bounds_at(&self, x: f64) -> Option<(f64, f64)> {
        self.inner
            .bounds_at(x)
            .or_else(|| self.outer.as_ref().and_then(|s| s.bounds_at(x)))
    }

    /// Grid rows with the normalized middle generator alongside.
    pub fn rows(&self, h: &Generator) -> Vec<EnvelopeRow> {
        let seg_rows = |s: &EnvelopeSegment| -> Vec<EnvelopeRow> {
            s.xs.iter()
                .zip(&s.lower)
                .zip(&s.upper)
                .map(|((&x, &lower), &upper)| EnvelopeRow {
                    x,
                    lower,
                    upper,
                    h_normalized: normalized(h, self.x0, self.x1, x),
                })
                .collect()
        };
        let mut rows = seg_rows(&self.inner);
        if let Some(o) = &self.outer {
            rows.extend(seg_rows(o).into_iter().skip(1));
        }
        rows
    }

    /// Smallest margin `min(h - lower, upper - h)` over the grid, and where.
    pub fn containment_slack(&self, h: &Generator) -> (f64, f64) {
        self.rows(h)
            .iter()
            .map(|r| ((r.h_normalized - r.lower).min(r.upper - r.h_normalized), r.x))
            .fold((f64::INFINITY, f64::NAN), |acc, v| if v.0 < acc.0 { v } else { acc })
    }
}

/// Envelope implied by `A[f] <= A[g]` for pins `x0 < x1`.
pub fn sandwich_envelope(f: &Generator, g: &Generator, x0: f64, x1: f64, settings: &Settings) -> Result<Envelope> {
    require_common_domain(f, g)?;
    f.domain().check(x0)?;
    f.domain().check(x1)?;
    if !(x0 < x1) {
        return Err(QamError::InvalidParameter(format!("pins must satisfy x0 < x1, got {x0}, {x1}")));
    }
    let v = compare(f, g, settings)?;
    if !matches!(v.relation, Relation::Less | Relation::Equal) {
        return Err(QamError::NotComparable(format!(
            "A[{}] <= A[{}] does not hold ({:?})",
            f.expr(),
            g.expr(),
            v.relation
        )));
    }
    Ok(Envelope::build(f, g, x0, x1))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PinCheck {
    pub x0: f64,
    pub x1: f64,
    pub min_slack: f64,
    pub worst_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub f: String,
    pub h: String,
    pub g: String,
    pub domain: String,
    pub passed: bool,
    pub relation_fh: Option<Relation>,
    pub relation_hg: Option<Relation>,
    pub pins: Vec<PinCheck>,
    pub samples_checked: usize,
    /// Largest `A[f] - A[h]` or `A[h] - A[g]` over the direct samples.
    pub max_sample_violation: f64,
    pub violations: Vec<String>,
    pub seed: u64,
}

/// Checks `A[f] <= A[h] <= A[g]` through the comparison engine, envelope
/// containment on seeded pin pairs, and direct mean evaluation.
pub fn verify_sandwich(f: &Generator, h: &Generator, g: &Generator, settings: &Settings) -> Result<SandwichReport> {
    require_common_domain(f, h)?;
    require_common_domain(h, g)?;
    let mut violations = Vec::new();
    let mut relation = |a: &Generator, b: &Generator| match compare(a, b, settings) {
        Ok(v) => {
            if !matches!(v.relation, Relation::Less | Relation::Equal) {
                violations.push(format!("A[{}] vs A[{}] is {:?}", a.expr(), b.expr(), v.relation));
            }
            Some(v.relation)
        }
        Err(e) => {
            violations.push(format!("A[{}] vs A[{}]: {e}", a.expr(), b.expr()));
            None
        }
    };
    let relation_fh = relation(f, h);
    let relation_hg = relation(h, g);

    let d = *f.domain();
    let (lo, hi) = (d.sample_lo(), d.sample_hi());
    let mut pins = Vec::new();
    if violations.is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.stream_seed(STREAM_PINS));
        while pins.len() < settings.plan.pins {
            let (a, b) = (rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
            let (x0, x1) = (a.min(b), a.max(b));
            if x1 - x0 < 1e-3 * (hi - lo) {
                continue;
            }
            let env = Envelope::build(f, g, x0, x1);
            let (min_slack, worst_x) = env.containment_slack(h);
            if min_slack < -settings.tol.compare {
                violations.push(format!("pins ({x0}, {x1}): normalized h leaves the envelope at x = {worst_x} by {}", -min_slack));
            }
            pins.push(PinCheck {
                x0,
                x1,
                min_slack,
                worst_x,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(settings.stream_seed(STREAM_SANDWICH));
    let lengths = settings.plan.max_len.max(2) - 1;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..settings.plan.sandwich_samples {
        let s = WeightedSample::random(&mut rng, &d, 2 + k % lengths);
        let (af, ah, ag) = (quasi_mean(f, &s)?, quasi_mean(h, &s)?, quasi_mean(g, &s)?);
        let v = (af - ah).max(ah - ag);
        worst = worst.max(v);
        if v > settings.tol.mean && violations.len() < 16 {
            violations.push(format!("sample {s}: A[f] = {af}, A[h] = {ah}, A[g] = {ag}"));
        }
    }

    Ok(SandwichReport {
        f: f.expr().to_string(),
        h: h.expr().to_string(),
        g: g.expr().to_string(),
        domain: d.to_string(),
        passed: violations.is_empty(),
        relation_fh,
        relation_hg,
        pins,
        samples_checked: settings.plan.sandwich_samples,
        max_sample_violation: worst,
        violations,
        seed: settings.seed,
    })
}
