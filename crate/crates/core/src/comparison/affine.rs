use serde::Serialize;

use crate::generator::Generator;
use crate::numeric::linspace;
use crate::settings::{Settings, MIN_GRID_N};

/// Parameters of `g = alpha * f + beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AffineFit {
    pub alpha: f64,
    pub beta: f64,
    /// Largest residual on the grid, relative to the value scale.
    pub residual: f64,
}

/// Fits `g = alpha f + beta` through the two ends of the sampling range and
/// checks it on the whole grid. Equal means are exactly this relation.
pub fn affine_equivalence(f: &Generator, g: &Generator, settings: &Settings) -> Option<AffineFit> {
    if f.domain() != g.domain() {
        return None;
    }
    let d = f.domain();
    let xs = linspace(d.sample_lo(), d.sample_hi(), settings.grid_n.max(MIN_GRID_N));
    let fv: Vec<f64> = xs.iter().map(|&x| f.eval_unchecked(x)).collect();
    let gv: Vec<f64> = xs.iter().map(|&x| g.eval_unchecked(x)).collect();
    let n = xs.len() - 1;
    let alpha = (gv[n] - gv[0]) / (fv[n] - fv[0]);
    if !alpha.is_finite() || alpha == 0.0 {
        return None;
    }
    let beta = gv[0] - alpha * fv[0];
    let scale = fv
        .iter()
        .zip(&gv)
        .map(|(a, b)| (alpha * a).abs().max(b.abs()))
        .fold(beta.abs(), f64::max)
        .max(f64::MIN_POSITIVE);
    let residual = fv
        .iter()
        .zip(&gv)
        .map(|(a, b)| (b - (alpha * a + beta)).abs())
        .fold(0.0, f64::max)
        / scale;
    (residual <= settings.tol.affine).then_some(AffineFit { alpha, beta, residual })
}
