//! Numerical tolerances and probe budgets shared by all operations.

use serde::{Deserialize, Serialize};

/// Default seed for every randomized probe plan.
pub const DEFAULT_SEED: u64 = 0x5141_4D00;

/// Default number of points in validation and criterion grids.
pub const DEFAULT_GRID_N: usize = 257;

/// Smallest grid accepted from user configuration.
pub const MIN_GRID_N: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative residual accepted by inversion.
    pub invert: f64,
    /// Relative agreement between analytic and numeric derivatives.
    pub deriv: f64,
    /// Absolute slack on mean inequalities.
    pub mean: f64,
    /// Relative slack on criterion inequalities. Refutation needs ten times this.
    pub compare: f64,
    /// Relative residual accepted when fitting `g = alpha * f + beta`.
    pub affine: f64,
    /// Relative size below which a Páles denominator is skipped.
    pub denominator: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            invert: 1e-12,
            deriv: 1e-6,
            mean: 1e-10,
            compare: 1e-9,
            affine: 1e-9,
            denominator: 1e-12,
        }
    }
}

impl Tolerances {
    /// Overrides one tolerance by name. Returns `false` on an unknown name.
    pub fn set(&mut self, name: &str, value: f64) -> bool {
        let slot = match name {
            "invert" => &mut self.invert,
            "deriv" => &mut self.deriv,
            "mean" => &mut self.mean,
            "compare" => &mut self.compare,
            "affine" => &mut self.affine,
            "denominator" => &mut self.denominator,
            _ => return false,
        };
        *slot = value;
        true
    }

    pub fn refute_threshold(&self) -> f64 {
        10.0 * self.compare
    }
}

/// Probe budget for the sampled criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Random weighted samples drawn by the sampled-means criterion.
    pub random_samples: usize,
    /// Longest random sample.
    pub max_len: usize,
    /// Points of the grid whose pairs form two-point samples.
    pub pair_grid: usize,
    /// Number of interior weights in the two-point weight grid.
    pub xi_grid: usize,
    /// Grid whose ordered triples feed the Páles criterion.
    pub triple_grid: usize,
    /// Extra seeded random triples for the Páles criterion.
    pub random_triples: usize,
    /// Pin pairs used for envelope containment checks.
    pub pins: usize,
    /// Random samples used by direct sandwich verification.
    pub sandwich_samples: usize,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            random_samples: 400,
            max_len: 6,
            pair_grid: 17,
            xi_grid: 9,
            triple_grid: 33,
            random_triples: 2000,
            pins: 10,
            sandwich_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub tol: Tolerances,
    pub grid_n: usize,
    pub seed: u64,
    pub plan: SamplingPlan,
    /// Evaluate independent probes on the rayon pool. Results do not depend on it.
    #[serde(skip)]
    pub parallel: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tol: Tolerances::default(),
            grid_n: DEFAULT_GRID_N,
            seed: DEFAULT_SEED,
            plan: SamplingPlan::default(),
            parallel: true,
        }
    }
}

impl Settings {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Derives an independent stream seed for one consumer of randomness.
    pub fn stream_seed(&self, stream: u64) -> u64 {
        self.seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}
