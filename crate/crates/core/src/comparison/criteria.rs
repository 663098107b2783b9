//! The individual comparability criteria. Each takes two generators on a
//! common domain, normalizes them to increasing form and reports evidence
//! for `A[f] <= A[g]` (LE) or `A[f] >= A[g]` (GE).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{require_common_domain, Claim, Criterion, CriterionReport, Probe, Tally};
use crate::error::{QamError, Result};
use crate::generator::Generator;
use crate::means::{quasi_mean, WeightedSample};
use crate::numeric::{indexed_map, linspace, pairwise_sum};
use crate::settings::{Settings, MIN_GRID_N};

const EPS: f64 = f64::EPSILON;

pub(crate) const STREAM_PALES: u64 = 1;
pub(crate) const STREAM_SAMPLED: u64 = 2;

/// Halving exponents of the domain width used for local Pales triples.
const LOCAL_SCALES: std::ops::RangeInclusive<i32> = 2..=10;
/// Halving exponents used for local two-point samples. Below these the mean
/// gaps fall under the refutation threshold anyway.
const LOCAL_PAIR_SCALES: std::ops::RangeInclusive<i32> = 2..=8;

/// Point pairs `(a, a +- h)` for anchors on a fine grid and geometric `h`.
fn local_pairs(lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
    let width = hi - lo;
    let mut pairs = Vec::new();
    for &a in &linspace(lo, hi, n) {
        for k in LOCAL_PAIR_SCALES {
            let h = width * 0.5f64.powi(k);
            if a + h <= hi {
                pairs.push((a, a + h));
            }
            if a - h >= lo {
                pairs.push((a, a - h));
            }
        }
    }
    pairs
}

/// Weight used by the fixed-weight two-point criterion.
pub const TWO_POINT_WEIGHT: f64 = 1.0 / 3.0;

fn canonical_pair(f: &Generator, g: &Generator) -> Result<(Generator, Generator)> {
    require_common_domain(f, g)?;
    Ok((f.canonicalize(), g.canonicalize()))
}

fn grid_n(settings: &Settings) -> usize {
    settings.grid_n.max(MIN_GRID_N)
}

/// Chord convexity of `g o f^-1` on a uniform grid of `f`'s range merged
/// with the image of a uniform grid of the domain. Convex means LE, concave
/// means GE.
pub fn composition_convexity_test(f: &Generator, g: &Generator, settings: &Settings) -> Result<CriterionReport> {
    let (f, g) = canonical_pair(f, g)?;
    let n = 2 * (grid_n(settings) - 1) + 1;
    let (ulo, uhi) = f.end_values();
    let us = linspace(ulo, uhi, n);
    let inverted = indexed_map(n, settings.parallel, |i| f.invert(us[i]))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let mut nodes: Vec<(f64, f64)> = us.iter().copied().zip(inverted).collect();
    // The range grid alone can miss order changes squeezed into a thin part
    // of the range; nodes uniform in x cover those.
    let d = f.domain();
    for x in linspace(d.sample_lo(), d.sample_hi(), grid_n(settings)) {
        nodes.push((f.eval_unchecked(x), x));
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    nodes.dedup_by(|a, b| a.0 == b.0);
    let (us, xs): (Vec<f64>, Vec<f64>) = nodes.into_iter().unzip();
    let n = us.len();
    let phi: Vec<f64> = xs.iter().map(|&x| g.eval_unchecked(x)).collect();
    let span = phi[n - 1] - phi[0];
    if !(span > 0.0) {
        return Ok(CriterionReport::not_applicable(
            Criterion::CompositionConvexity,
            "composition has an empty range",
        ));
    }

    // Rounding allowance per node: evaluation, inversion and grid placement.
    let noise: Vec<f64> = (0..n)
        .map(|j| {
            let (a, b) = (j.saturating_sub(1), (j + 1).min(n - 1));
            let dphi = (phi[b] - phi[a]).abs();
            let dx = (xs[b] - xs[a]).abs();
            let du = (us[b] - us[a]).abs();
            let slope_x = if dx > 0.0 { dphi / dx } else { 0.0 };
            let slope_u = if du > 0.0 { dphi / du } else { 0.0 };
            8.0 * EPS * (phi[j].abs() + slope_x * xs[j].abs() + slope_u * us[j].abs())
        })
        .collect();

    let mut tally = Tally::new(Criterion::CompositionConvexity);
    for i in 0..n {
        for k in (i + 2..n).step_by(2) {
            let m = (i + k) / 2;
            let t = (us[m] - us[i]) / (us[k] - us[i]);
            let gap = (phi[m] - ((1.0 - t) * phi[i] + t * phi[k])) / span;
            let slack = (noise[m] + (1.0 - t) * noise[i] + t * noise[k]) / span;
            tally.observe(gap - slack, -gap - slack, |against, violation| Probe {
                against,
                inputs: vec![us[i], us[k]],
                values: vec![phi[i], phi[m], phi[k]],
                violation,
                sample: None,
            });
        }
    }
    Ok(tally.finish(&settings.tol))
}

/// `(f(x)-f(y))/(f(x)-f(z)) >= (g(x)-g(y))/(g(x)-g(z))` on ordered triples.
pub fn pales_ratio_test(f: &Generator, g: &Generator, settings: &Settings) -> Result<CriterionReport> {
    let (f, g) = canonical_pair(f, g)?;
    let (lo, hi) = (f.domain().sample_lo(), f.domain().sample_hi());
    let grid = linspace(lo, hi, settings.plan.triple_grid.max(3));
    let mut triples = Vec::new();
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            for k in j + 1..grid.len() {
                triples.push([grid[i], grid[j], grid[k]]);
            }
        }
    }
    // Equally spaced triples at geometric scales along a fine grid, so that
    // order changes confined to a thin band are not missed.
    let width = hi - lo;
    for &a in &linspace(lo, hi, grid_n(settings)) {
        for k in LOCAL_SCALES {
            let h = width * 0.5f64.powi(k);
            if a + 2.0 * h <= hi {
                triples.push([a, a + h, a + 2.0 * h]);
            }
            if a - 2.0 * h >= lo {
                triples.push([a - 2.0 * h, a - h, a]);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.stream_seed(STREAM_PALES));
    for _ in 0..settings.plan.random_triples {
        let mut t = [rng.gen_range(lo..=hi), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)];
        t.sort_by(f64::total_cmp);
        if t[0] < t[1] && t[1] < t[2] {
            triples.push(t);
        }
    }

    let scale = |h: &Generator| {
        let (a, b) = h.range();
        a.abs().max(b.abs()).max(b - a)
    };
    let (scale_f, scale_g) = (scale(&f), scale(&g));
    let tol_den = settings.tol.denominator;
    let ratio = |h: &Generator, s: f64, t: &[f64; 3]| -> Option<(f64, f64)> {
        let (hx, hy, hz) = (h.eval_unchecked(t[0]), h.eval_unchecked(t[1]), h.eval_unchecked(t[2]));
        let den = hx - hz;
        if den.abs() < tol_den * s {
            return None;
        }
        let big = hx.abs().max(hy.abs()).max(hz.abs());
        Some(((hx - hy) / den, 8.0 * EPS * big / den.abs()))
    };
    let results = indexed_map(triples.len(), settings.parallel, |i| {
        let t = &triples[i];
        Some((ratio(&f, scale_f, t)?, ratio(&g, scale_g, t)?))
    });

    let mut tally = Tally::new(Criterion::PalesRatio);
    for (t, r) in triples.iter().zip(results) {
        let Some(((rf, nf), (rg, ng))) = r else {
            tally.skip();
            continue;
        };
        let gap = rg - rf;
        let slack = nf + ng;
        tally.observe(gap - slack, -gap - slack, |against, violation| Probe {
            against,
            inputs: t.to_vec(),
            values: vec![rf, rg],
            violation,
            sample: None,
        });
    }
    Ok(tally.finish(&settings.tol))
}

/// First (or second) derivatives of both generators on the grid, or the
/// reason the criterion does not apply.
fn derivative_table(f: &Generator, g: &Generator, settings: &Settings, order: u8) -> std::result::Result<(Vec<f64>, Vec<[f64; 4]>), String> {
    let xs = linspace(f.domain().sample_lo(), f.domain().sample_hi(), grid_n(settings));
    let mut rows = Vec::with_capacity(xs.len());
    for &x in &xs {
        let row = (|| -> Result<[f64; 4]> {
            let (f1, g1) = (f.derivative(x, 1)?, g.derivative(x, 1)?);
            let (f2, g2) = if order == 2 {
                (f.derivative(x, 2)?, g.derivative(x, 2)?)
            } else {
                (0.0, 0.0)
            };
            Ok([f1, g1, f2, g2])
        })()
        .map_err(|e| e.to_string())?;
        rows.push(row);
    }
    for (col, name) in [(0, "f'"), (1, "g'")] {
        let top = rows.iter().map(|r| r[col].abs()).fold(0.0, f64::max);
        if let Some(i) = rows.iter().position(|r| r[col].abs() <= 1e-12 * top) {
            return Err(format!("{name} vanishes at x = {}", xs[i]));
        }
    }
    Ok((xs, rows))
}

/// Monotonicity of `f'/g'`: non-increasing means LE.
pub fn derivative_ratio_test(f: &Generator, g: &Generator, settings: &Settings) -> Result<CriterionReport> {
    let (f, g) = canonical_pair(f, g)?;
    if !f.d1_available() || !g.d1_available() {
        return Ok(CriterionReport::not_applicable(
            Criterion::DerivativeRatio,
            "first derivative unavailable",
        ));
    }
    let (xs, rows) = match derivative_table(&f, &g, settings, 1) {
        Ok(t) => t,
        Err(why) => return Ok(CriterionReport::not_applicable(Criterion::DerivativeRatio, why)),
    };
    let r: Vec<f64> = rows.iter().map(|row| row[0] / row[1]).collect();
    let scale = r.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let mut tally = Tally::new(Criterion::DerivativeRatio);
    let (mut imin, mut imax) = (0, 0);
    for j in 1..r.len() {
        if r[j - 1] < r[imin] {
            imin = j - 1;
        }
        if r[j - 1] > r[imax] {
            imax = j - 1;
        }
        let slack = 8.0 * EPS * (r[j].abs() + r[imin].abs().max(r[imax].abs())) / scale;
        let rise = (r[j] - r[imin]) / scale - slack;
        let drop = (r[imax] - r[j]) / scale - slack;
        tally.observe(rise, drop, |against, violation| {
            let i = if against == Claim::LE { imin } else { imax };
            Probe {
                against,
                inputs: vec![xs[i], xs[j]],
                values: vec![r[i], r[j]],
                violation,
                sample: None,
            }
        });
    }
    Ok(tally.finish(&settings.tol))
}

/// The index `f''(x) / f'(x)`.
pub fn mikusinski_index(f: &Generator, x: f64) -> Result<f64> {
    let d1 = f.derivative(x, 1)?;
    if d1 == 0.0 {
        return Err(QamError::ZeroDerivative(x));
    }
    Ok(f.derivative(x, 2)? / d1)
}

/// Pointwise comparison of `f''/f'` and `g''/g'`: `index_f <= index_g` means LE.
pub fn mikusinski_test(f: &Generator, g: &Generator, settings: &Settings) -> Result<CriterionReport> {
    let (f, g) = canonical_pair(f, g)?;
    if !f.d2_available() || !g.d2_available() {
        return Ok(CriterionReport::not_applicable(
            Criterion::MikusinskiIndex,
            "second derivative unavailable",
        ));
    }
    let (xs, rows) = match derivative_table(&f, &g, settings, 2) {
        Ok(t) => t,
        Err(why) => return Ok(CriterionReport::not_applicable(Criterion::MikusinskiIndex, why)),
    };
    let idx: Vec<(f64, f64)> = rows.iter().map(|r| (r[2] / r[0], r[3] / r[1])).collect();
    let top = idx.iter().map(|(a, b)| a.abs().max(b.abs())).fold(0.0, f64::max);
    let scale = top.max(1.0 / f.domain().sample_width());

    let mut tally = Tally::new(Criterion::MikusinskiIndex);
    for (x, (a, b)) in xs.iter().zip(&idx) {
        let gap = (a - b) / scale;
        let slack = 16.0 * EPS * (a.abs() + b.abs()) / scale;
        tally.observe(gap - slack, -gap - slack, |against, violation| Probe {
            against,
            inputs: vec![*x],
            values: vec![*a, *b],
            violation,
            sample: None,
        });
    }
    Ok(tally.finish(&settings.tol))
}

/// Half-width of the interval of means compatible with rounding in the
/// weighted sum.
fn mean_uncertainty(g: &Generator, s: &WeightedSample, m: f64) -> f64 {
    let terms: Vec<f64> = s.points().iter().zip(s.weights()).map(|(p, w)| w * g.eval_unchecked(*p)).collect();
    let total = pairwise_sum(&terms);
    let mag = pairwise_sum(&terms.iter().map(|t| t.abs()).collect::<Vec<_>>());
    let delta = 8.0 * EPS * (mag + total.abs());
    let lo = g.invert(total - delta).unwrap_or(m);
    let hi = g.invert(total + delta).unwrap_or(m);
    0.5 * (hi - lo).abs() + 4.0 * EPS * m.abs()
}

fn mean_probe_report(criterion: Criterion, f: &Generator, g: &Generator, samples: &[WeightedSample], settings: &Settings) -> Result<CriterionReport> {
    let width = f.domain().sample_width();
    let tol = settings.tol.compare;
    let results = indexed_map(samples.len(), settings.parallel, |i| -> Result<(f64, f64, f64)> {
        let s = &samples[i];
        let (af, ag) = (quasi_mean(f, s)?, quasi_mean(g, s)?);
        let gap = (af - ag) / width;
        let slack = if gap.abs() > tol {
            (mean_uncertainty(f, s, af) + mean_uncertainty(g, s, ag)) / width
        } else {
            0.0
        };
        Ok((af, ag, slack))
    });
    let mut tally = Tally::new(criterion);
    for (s, r) in samples.iter().zip(results) {
        let (af, ag, slack) = r?;
        let gap = (af - ag) / width;
        tally.observe(gap - slack, -gap - slack, |against, violation| Probe {
            against,
            inputs: s.points().to_vec(),
            values: vec![af, ag],
            violation,
            sample: Some(s.clone()),
        });
    }
    Ok(tally.finish(&settings.tol))
}

/// Direct evaluation of both means on seeded random samples of lengths
/// `2..=max_len` and on a grid of weighted two-point samples.
pub fn sampled_means_test(f: &Generator, g: &Generator, settings: &Settings) -> Result<CriterionReport> {
    let (f, g) = canonical_pair(f, g)?;
    let plan = &settings.plan;
    let domain = *f.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(settings.stream_seed(STREAM_SAMPLED));
    let lengths = plan.max_len.max(2) - 1;
    let mut samples: Vec<WeightedSample> = (0..plan.random_samples)
        .map(|k| WeightedSample::random(&mut rng, &domain, 2 + k % lengths))
        .collect();
    let grid = linspace(domain.sample_lo(), domain.sample_hi(), plan.pair_grid.max(2));
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            for t in 1..=plan.xi_grid {
                let xi = t as f64 / (plan.xi_grid + 1) as f64;
                samples.push(WeightedSample::two_point(grid[i], grid[j], xi)?);
            }
        }
    }
    for (a, b) in local_pairs(domain.sample_lo(), domain.sample_hi(), grid_n(settings)) {
        samples.push(WeightedSample::two_point(a, b, 0.5)?);
    }
    mean_probe_report(Criterion::SampledMeans, &f, &g, &samples, settings)
}

/// Two-point means with the fixed weight [`TWO_POINT_WEIGHT`] on all ordered grid pairs.
pub fn weighted_two_point_test(f: &Generator, g: &Generator, settings: &Settings) -> Result<CriterionReport> {
    let (f, g) = canonical_pair(f, g)?;
    let d = f.domain();
    let grid = linspace(d.sample_lo(), d.sample_hi(), settings.plan.triple_grid.max(2));
    let mut samples = Vec::new();
    for &a in &grid {
        for &b in &grid {
            if a != b {
                samples.push(WeightedSample::two_point(a, b, TWO_POINT_WEIGHT)?);
            }
        }
    }
    for (a, b) in local_pairs(d.sample_lo(), d.sample_hi(), grid_n(settings)) {
        samples.push(WeightedSample::two_point(a, b, TWO_POINT_WEIGHT)?);
    }
    mean_probe_report(Criterion::WeightedTwoPoint, &f, &g, &samples, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparison::CriterionVerdict::*;
    use crate::generator::parse_generator;

    fn gen(t: &str, d: &str) -> Generator {
        parse_generator(t, d.parse().unwrap()).unwrap()
    }

    const H: &str = "piecewise(1; id; affine(0.5,0.5,pow(2)))";

    #[test]
    fn composition_examples() {
        let s = Settings::default();
        let r = composition_convexity_test(&gen("id", "(0,4)"), &gen("pow(2)", "(0,4)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsLE);
        let r = composition_convexity_test(&gen("pow(2)", "(0,4)"), &gen("id", "(0,4)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsGE);
        let r = composition_convexity_test(&gen("id", "(-1,1)"), &gen("pow(3)", "(-1,1)"), &s).unwrap();
        assert_eq!(r.verdict, Refutes);
        assert!(r.refuting_probe(Claim::LE, &s.tol).is_some());
        assert!(r.refuting_probe(Claim::GE, &s.tol).is_some());
        let r = composition_convexity_test(&gen("log", "(0,4)"), &gen("log", "(0,4)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsEqual);
    }

    #[test]
    fn pales_single_triple() {
        // (1-2)/(1-3) = 1/2 against (1-4)/(1-9) = 3/8
        let f = gen("id", "(0,4)");
        let g = gen("pow(2)", "(0,4)");
        let rf = (f.eval(1.0).unwrap() - f.eval(2.0).unwrap()) / (f.eval(1.0).unwrap() - f.eval(3.0).unwrap());
        let rg = (g.eval(1.0).unwrap() - g.eval(2.0).unwrap()) / (g.eval(1.0).unwrap() - g.eval(3.0).unwrap());
        assert_eq!((rf, rg), (0.5, 0.375));
        let s = Settings::default();
        assert_eq!(pales_ratio_test(&f, &g, &s).unwrap().verdict, SupportsLE);
    }

    #[test]
    fn pales_examples() {
        let s = Settings::default();
        let f = gen("exp(-1)", "(0,3)");
        assert_eq!(pales_ratio_test(&f, &f, &s).unwrap().verdict, SupportsEqual);
        let r = pales_ratio_test(&gen("id", "(-1,1)"), &gen("pow(3)", "(-1,1)"), &s).unwrap();
        assert_eq!(r.verdict, Refutes);
    }

    #[test]
    fn derivative_ratio_examples() {
        let s = Settings::default();
        let r = derivative_ratio_test(&gen("id", "(0,4)"), &gen("pow(2)", "(0,4)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsLE);
        let r = derivative_ratio_test(&gen("exp(1)", "(0,4)"), &gen("exp(2)", "(0,4)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsLE);
        // only first derivatives are needed, so the C^1 example still applies
        let r = derivative_ratio_test(&gen(H, "(0,2)"), &gen("pow(2)", "(0,2)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsLE);
        let r = derivative_ratio_test(&gen("id", "(-1,1)"), &gen("pow(3)", "(-1,1)"), &s).unwrap();
        assert_eq!(r.verdict, NotApplicable, "{r:?}");
    }

    #[test]
    fn mikusinski_index_examples() {
        let id = gen("id", "(0,4)");
        assert_eq!(mikusinski_index(&id, 1.7).unwrap(), 0.0);
        for l in [-2.0, 0.5, 1.5] {
            let e = Generator::new(crate::GeneratorExpr::Exp(l), "(0,4)".parse().unwrap()).unwrap();
            assert!((mikusinski_index(&e, 0.3).unwrap() - l).abs() < 1e-14);
        }
        let p = gen("pow(3)", "(0,4)");
        assert!((mikusinski_index(&p, 2.0).unwrap() - 1.0).abs() < 1e-15);
        let c = gen("pow(3)", "(-1,1)");
        assert!(matches!(mikusinski_index(&c, 0.0), Err(QamError::ZeroDerivative(_))));
        let h = gen(H, "(0,2)");
        assert!(matches!(mikusinski_index(&h, 1.0), Err(QamError::NotDifferentiable(_))));
    }

    #[test]
    fn mikusinski_test_examples() {
        let s = Settings::default();
        let r = mikusinski_test(&gen("id", "(0,4)"), &gen("pow(2)", "(0,4)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsLE);
        let r = mikusinski_test(&gen("exp(2)", "(0,4)"), &gen("exp(1)", "(0,4)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsGE);
        let r = mikusinski_test(&gen(H, "(0,2)"), &gen("id", "(0,2)"), &s).unwrap();
        assert_eq!(r.verdict, NotApplicable);
    }

    #[test]
    fn sampled_means_examples() {
        let s = Settings::default();
        let r = sampled_means_test(&gen("id", "(0,4)"), &gen("pow(2)", "(0,4)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsLE);
        let f = gen("exp(1)", "(0,4)");
        let r = sampled_means_test(&f, &gen("affine(2,1,exp(1))", "(0,4)"), &s).unwrap();
        assert_eq!(r.verdict, SupportsEqual);
        let r = sampled_means_test(&gen("id", "(-1,1)"), &gen("pow(3)", "(-1,1)"), &s).unwrap();
        assert_eq!(r.verdict, Refutes);
        let le = r.refuting_probe(Claim::LE, &s.tol).unwrap();
        assert!(le.values[0] > le.values[1]);
    }

    #[test]
    fn cubic_mean_witness_values() {
        // brute force: cbrt((0.1^3 + 0.2^3)/2) = cbrt(0.0045)
        let c = gen("pow(3)", "(-1,1)");
        let s = WeightedSample::uniform(vec![0.1, 0.2]).unwrap();
        let m = quasi_mean(&c, &s).unwrap();
        assert!((m - 0.0045f64.cbrt()).abs() < 1e-15);
        assert!((m - 0.1651).abs() < 1e-4 && m > 0.15);
        let s = WeightedSample::uniform(vec![-0.2, -0.1]).unwrap();
        assert!((quasi_mean(&c, &s).unwrap() + 0.0045f64.cbrt()).abs() < 1e-15);
    }

    #[test]
    fn parallel_and_sequential_reports_match() {
        let par = Settings::default();
        let seq = Settings { parallel: false, ..par };
        let (f, g) = (gen("exp(1)", "(0.5,2)"), gen("pow(2)", "(0.5,2)"));
        assert_eq!(sampled_means_test(&f, &g, &par).unwrap(), sampled_means_test(&f, &g, &seq).unwrap());
        assert_eq!(pales_ratio_test(&f, &g, &par).unwrap(), pales_ratio_test(&f, &g, &seq).unwrap());
        assert_eq!(
            composition_convexity_test(&f, &g, &par).unwrap(),
            composition_convexity_test(&f, &g, &seq).unwrap()
        );
    }
}
