//! Weighted quasi-arithmetic means and their named specializations.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QamError, Result};
use crate::generator::{Domain, Generator};
use crate::numeric::pairwise_sum;

/// Points with positive weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl WeightedSample {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(QamError::InvalidParameter("empty sample".into()));
        }
        if points.len() != weights.len() {
            return Err(QamError::InvalidParameter(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(QamError::InvalidParameter(format!("non-finite point {p}")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(QamError::InvalidParameter(format!("weight {w} is not positive")));
        }
        let total: f64 = pairwise_sum(&weights);
        if (total - 1.0).abs() > 1e-12 {
            return Err(QamError::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        Ok(WeightedSample { points, weights })
    }

    /// Equal weights `1/n`.
    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    /// `(a, b)` with weights `xi` and `1 - xi`.
    pub fn two_point(a: f64, b: f64, xi: f64) -> Result<Self> {
        Self::new(vec![a, b], vec![xi, 1.0 - xi])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.points.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.points.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// (point, weight) pairs in ascending point order.
    fn sorted_pairs(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, f64)> = self.points.iter().copied().zip(self.weights.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pairs
    }

    /// Random sample of `len` points drawn uniformly from the sampling range of `domain`.
    pub fn random<R: Rng>(rng: &mut R, domain: &Domain, len: usize) -> Self {
        let (lo, hi) = (domain.sample_lo(), domain.sample_hi());
        let points: Vec<f64> = (0..len).map(|_| rng.gen_range(lo..=hi)).collect();
        let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total = pairwise_sum(&raw);
        let weights = raw.iter().map(|w| w / total).collect();
        WeightedSample { points, weights }
    }
}

impl fmt::Display for WeightedSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (p, w)) in self.points.iter().zip(&self.weights).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{p}:{w}")?;
        }
        Ok(())
    }
}

/// `p1:w1,p2:w2,...` or `p1,p2,...` (equal weights).
impl FromStr for WeightedSample {
    type Err = QamError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |item: &str| QamError::Parse {
            pos: 0,
            msg: format!("bad sample entry {item:?}"),
        };
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for item in s.split(',') {
            let item = item.trim();
            match item.split_once(':') {
                Some((p, w)) => {
                    points.push(p.trim().parse::<f64>().map_err(|_| bad(item))?);
                    weights.push(w.trim().parse::<f64>().map_err(|_| bad(item))?);
                }
                None => points.push(item.parse::<f64>().map_err(|_| bad(item))?),
            }
        }
        match weights.len() {
            0 => WeightedSample::uniform(points),
            n if n == points.len() => WeightedSample::new(points, weights),
            _ => Err(QamError::Parse {
                pos: 0,
                msg: "either every entry or none must carry a weight".into(),
            }),
        }
    }
}

/// `g^{-1}(sum w_i g(a_i))`, summed pairwise over ascending points.
pub fn quasi_mean(g: &Generator, s: &WeightedSample) -> Result<f64> {
    let pairs = s.sorted_pairs();
    let mut terms = Vec::with_capacity(pairs.len());
    for &(p, w) in &pairs {
        terms.push(w * g.eval(p)?);
    }
    let (lo, hi) = (pairs[0].0, pairs[pairs.len() - 1].0);
    if lo == hi {
        return Ok(lo);
    }
    let m = g.invert(pairwise_sum(&terms))?;
    Ok(m.clamp(lo, hi))
}

/// Weighted power mean; `p = 0` is the geometric mean.
pub fn power_mean(p: f64, s: &WeightedSample) -> Result<f64> {
    if !p.is_finite() {
        return Err(QamError::InvalidParameter(format!("power {p}")));
    }
    if let Some(x) = s.points.iter().find(|&&x| !(x > 0.0)) {
        return Err(QamError::Domain(format!("power mean needs positive points, got {x}")));
    }
    let pairs = s.sorted_pairs();
    let (lo, hi) = (pairs[0].0, pairs[pairs.len() - 1].0);
    if lo == hi {
        return Ok(lo);
    }
    let m = if p == 0.0 {
        let logs: Vec<f64> = pairs.iter().map(|(x, w)| w * x.ln()).collect();
        pairwise_sum(&logs).exp()
    } else {
        // Factor out the point that makes every ratio^p at most 1.
        let pivot = if p > 0.0 { hi } else { lo };
        let terms: Vec<f64> = pairs.iter().map(|(x, w)| w * (x / pivot).powf(p)).collect();
        pivot * pairwise_sum(&terms).powf(1.0 / p)
    };
    Ok(m.clamp(lo, hi))
}

/// Quasi-arithmetic mean generated by `e^(lambda x)`, in log-sum-exp form.
pub fn exponential_mean(lambda: f64, s: &WeightedSample) -> Result<f64> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(QamError::InvalidParameter(format!(
            "exponential mean needs a finite nonzero rate, got {lambda}"
        )));
    }
    let pairs = s.sorted_pairs();
    let (lo, hi) = (pairs[0].0, pairs[pairs.len() - 1].0);
    if lo == hi {
        return Ok(lo);
    }
    let shift = pairs
        .iter()
        .map(|(x, _)| lambda * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let terms: Vec<f64> = pairs.iter().map(|(x, w)| w * (lambda * x - shift).exp()).collect();
    let m = (shift + pairwise_sum(&terms).ln()) / lambda;
    Ok(m.clamp(lo, hi))
}
