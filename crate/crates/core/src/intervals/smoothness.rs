use serde::Serialize;

use crate::comparison::require_common_domain;
use crate::error::Result;
use crate::generator::{DerivativeEstimate, Generator, Side};
use crate::settings::Settings;

/// What the outer generators' one-sided slopes at `x0` predict for the middle one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Prediction {
    /// `f` and `g` differentiable with nonzero derivative: `h` is too.
    Differentiable,
    /// Nonzero one-sided derivatives on every available side: so are `h`'s.
    OneSidedNonvanishing,
    /// All available one-sided derivatives of `f` and `g` vanish: `h`'s vanish as well.
    Vanishing,
    None,
}

/// One-sided first derivative estimate, or why there is none.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SideReading {
    Estimate(DerivativeEstimate),
    Unavailable(String),
}

impl SideReading {
    pub fn estimate(&self) -> Option<&DerivativeEstimate> {
        match self {
            SideReading::Estimate(e) => Some(e),
            SideReading::Unavailable(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub x0: f64,
    pub prediction: Prediction,
    pub f_left: SideReading,
    pub f_right: SideReading,
    pub g_left: SideReading,
    pub g_right: SideReading,
    pub h_left: SideReading,
    pub h_right: SideReading,
    pub h_left_second: SideReading,
    pub h_right_second: SideReading,
    /// Measurements agree with the prediction.
    pub consistent: bool,
    pub notes: Vec<String>,
}

fn read(g: &Generator, x0: f64, side: Side, order: u8) -> SideReading {
    match g.one_sided_derivative_estimate(x0, side, order) {
        Ok(e) => SideReading::Estimate(e),
        Err(e) => SideReading::Unavailable(e.to_string()),
    }
}

/// Typical slope of `g`, used to decide what counts as a zero derivative.
fn slope_scale(g: &Generator) -> f64 {
    let (a, b) = g.range();
    (b - a) / g.domain().sample_width()
}

fn vanishes(e: &DerivativeEstimate, scale: f64) -> bool {
    e.value.abs() <= 1e-6 * scale + 10.0 * e.uncertainty
}

fn agree(a: &DerivativeEstimate, b: &DerivativeEstimate) -> bool {
    (a.value - b.value).abs() <= 3.0 * (a.uncertainty + b.uncertainty) + 1e-6 * a.value.abs().max(1.0)
}

/// Measures the one-sided derivatives of `h` at `x0` and sets them against
/// what the sandwich `A[f] <= A[h] <= A[g]` predicts. Reports, never asserts.
pub fn smoothness_probe(f: &Generator, h: &Generator, g: &Generator, x0: f64, _settings: &Settings) -> Result<SmoothnessReport> {
    require_common_domain(f, h)?;
    require_common_domain(h, g)?;
    f.domain().check(x0)?;
    let mut notes = Vec::new();
    let mut report = SmoothnessReport {
        x0,
        prediction: Prediction::None,
        f_left: read(f, x0, Side::Left, 1),
        f_right: read(f, x0, Side::Right, 1),
        g_left: read(g, x0, Side::Left, 1),
        g_right: read(g, x0, Side::Right, 1),
        h_left: read(h, x0, Side::Left, 1),
        h_right: read(h, x0, Side::Right, 1),
        h_left_second: read(h, x0, Side::Left, 2),
        h_right_second: read(h, x0, Side::Right, 2),
        consistent: true,
        notes: Vec::new(),
    };
    let (sf, sg, sh) = (slope_scale(f), slope_scale(g), slope_scale(h));

    let sides = [
        (report.f_left.estimate(), report.g_left.estimate(), report.h_left.estimate(), "left"),
        (report.f_right.estimate(), report.g_right.estimate(), report.h_right.estimate(), "right"),
    ];
    let outer: Vec<_> = sides
        .iter()
        .filter_map(|(fe, ge, he, name)| Some((*fe.as_ref()?, *ge.as_ref()?, *he, *name)))
        .collect();
    if outer.is_empty() {
        notes.push("no one-sided derivative of f and g could be estimated".into());
    } else if outer.iter().all(|(fe, ge, _, _)| !vanishes(fe, sf) && !vanishes(ge, sg)) {
        let two_sided = outer.len() == 2 && agree(outer[0].0, outer[1].0) && agree(outer[0].1, outer[1].1);
        report.prediction = if two_sided {
            Prediction::Differentiable
        } else {
            Prediction::OneSidedNonvanishing
        };
        for (_, _, he, name) in &outer {
            match he {
                Some(e) if !vanishes(e, sh) => {}
                Some(e) => {
                    report.consistent = false;
                    notes.push(format!("h' on the {name} is {} but a nonzero value was predicted", e.value));
                }
                None => {
                    report.consistent = false;
                    notes.push(format!("h' on the {name} could not be estimated"));
                }
            }
        }
        if two_sided {
            match (outer[0].2, outer[1].2) {
                (Some(l), Some(r)) if agree(l, r) => {}
                (Some(l), Some(r)) => {
                    report.consistent = false;
                    notes.push(format!("one-sided slopes of h differ: {} vs {}", l.value, r.value));
                }
                _ => {}
            }
        }
    } else if outer.iter().all(|(fe, ge, _, _)| vanishes(fe, sf) && vanishes(ge, sg)) {
        report.prediction = Prediction::Vanishing;
        for (_, _, he, name) in &outer {
            if !he.map_or(false, |e| vanishes(e, sh)) {
                report.consistent = false;
                notes.push(format!("h' on the {name} was predicted to vanish"));
            }
        }
    } else {
        notes.push("f and g disagree on whether their slopes vanish".into());
    }
    report.notes = notes;
    Ok(report)
}
