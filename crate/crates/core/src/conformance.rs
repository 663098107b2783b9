//! Runs the bundled corpus end to end and collects a machine-readable
//! conformance report. Every randomized section draws from its own seeded
//! stream, so equal settings give an identical report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::comparison::{compare, find_incomparability_witness, mikusinski_index, Relation};
use crate::corpus::{self, PIECEWISE_H};
use crate::error::{QamError, Result};
use crate::generator::{parse_generator_with, Domain, Generator, GeneratorExpr};
use crate::intervals::{
    exponential_family, hull_membership_exponential, normalized, sandwich_envelope, smoothness_probe, verify_sandwich,
    window_membership, HullMembership, MikusinskiWindow, WindowMembership,
};
use crate::means::{exponential_mean, power_mean, quasi_mean, WeightedSample};
use crate::numeric::linspace;
use crate::settings::{Settings, Tolerances};

const STREAM_POWER: u64 = 10;
const STREAM_PAIRS: u64 = 11;
const STREAM_AFFINE: u64 = 12;
const STREAM_EXP_MEANS: u64 = 13;

pub const POWER_EXPONENTS: [f64; 7] = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0];
pub const POWER_SAMPLES: usize = 1000;
pub const DIRECT_SAMPLES: usize = 1000;
pub const AFFINE_CASES: usize = 50;
pub const EXP_MEAN_SAMPLES: usize = 500;
pub const MEAN_SLACK: f64 = 1e-10;
pub const AFFINE_REL_TOL: f64 = 1e-9;
pub const WITNESS_MIN_GAP: f64 = 1e-3;
pub const INDEX_TOL: f64 = 1e-12;
pub const SLOPE_TOL: f64 = 1e-4;
pub const CURVATURE_JUMP: f64 = 0.5;
pub const ENVELOPE_SLACK: f64 = -1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerOrderSection {
    pub exponents: Vec<f64>,
    pub samples: usize,
    pub comparisons: usize,
    /// Largest `M_p(s) - M_q(s)` over `p < q`.
    pub max_violation: f64,
    pub worst: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairOutcome {
    pub f: String,
    pub g: String,
    pub domain: String,
    pub relation: Option<Relation>,
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Direct samples used to confirm an order verdict.
    pub direct_samples: usize,
    /// Largest excess of the mean claimed smaller, or `|A[f] - A[g]|` for `Equal`.
    pub direct_max_violation: Option<f64>,
    /// `A[f] - A[g]` on the two witnesses of an `Incomparable` verdict.
    pub witness_gaps: Option<(f64, f64)>,
    pub confirmed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AffineCase {
    pub f: String,
    pub alpha: f64,
    pub beta: f64,
    pub relation: Option<Relation>,
    pub recovered_alpha: Option<f64>,
    pub recovered_beta: Option<f64>,
    pub alpha_rel_error: Option<f64>,
    pub beta_rel_error: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PiecewiseExampleSection {
    pub domain: String,
    pub f: String,
    pub h: String,
    pub g: String,
    pub sandwich_passed: bool,
    pub sandwich_samples: usize,
    pub sandwich_violations: Vec<String>,
    pub x0: f64,
    pub slope_left: Option<f64>,
    pub slope_right: Option<f64>,
    pub curvature_left: Option<f64>,
    pub curvature_right: Option<f64>,
    pub smoothness_consistent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessSection {
    pub f: String,
    pub g: String,
    pub domain: String,
    pub x0: f64,
    pub error: Option<String>,
    pub s_plus: Option<WeightedSample>,
    pub s_minus: Option<WeightedSample>,
    /// `A[f] - A[g]` re-evaluated on each witness.
    pub gap_plus: Option<f64>,
    pub gap_minus: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MikusinskiSection {
    pub domain: String,
    pub rates: Vec<f64>,
    pub points: Vec<f64>,
    pub max_index_error: f64,
    pub mean_samples: usize,
    /// Largest `E_a(s) - E_b(s)` over consecutive rates `a < b`.
    pub max_order_violation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HullCase {
    pub gen: String,
    pub domain: String,
    pub window: String,
    pub window_membership: Option<WindowMembership>,
    pub hull: Option<HullMembership>,
    pub error: Option<String>,
    /// Independent re-check of a `Member` certificate.
    pub certificate_verified: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PinOutcome {
    pub x0: f64,
    pub x1: f64,
    pub grid_points: usize,
    pub pinned: bool,
    pub min_slack: f64,
    pub worst_x: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TripleOutcome {
    pub f: String,
    pub h: String,
    pub g: String,
    pub domain: String,
    pub sandwich_passed: bool,
    pub violations: Vec<String>,
    pub min_pin_slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformanceReport {
    pub seed: u64,
    pub grid_n: usize,
    pub tolerances: Tolerances,
    pub outcomes: Vec<Outcome>,
    pub power_order: PowerOrderSection,
    pub pairs: Vec<PairOutcome>,
    pub affine: Vec<AffineCase>,
    pub piecewise_example: PiecewiseExampleSection,
    pub witness: WitnessSection,
    pub mikusinski: MikusinskiSection,
    pub hull: Vec<HullCase>,
    pub envelope: Vec<PinOutcome>,
    pub triples: Vec<TripleOutcome>,
}

impl ConformanceReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

fn gen(text: &str, domain: &str, settings: &Settings) -> Result<Generator> {
    parse_generator_with(text, domain.parse()?, settings)
}

fn power_order(settings: &Settings) -> Result<(PowerOrderSection, Outcome)> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.stream_seed(STREAM_POWER));
    let domain: Domain = "[0.1,10]".parse()?;
    let mut section = PowerOrderSection {
        exponents: POWER_EXPONENTS.to_vec(),
        samples: POWER_SAMPLES,
        comparisons: 0,
        max_violation: f64::NEG_INFINITY,
        worst: None,
    };
    for _ in 0..POWER_SAMPLES {
        let len = rng.gen_range(2..=6);
        let s = WeightedSample::random(&mut rng, &domain, len);
        let means = POWER_EXPONENTS.iter().map(|&p| power_mean(p, &s)).collect::<Result<Vec<_>>>()?;
        for i in 0..means.len() {
            for j in i + 1..means.len() {
                section.comparisons += 1;
                let v = means[i] - means[j];
                if v > section.max_violation {
                    section.max_violation = v;
                    section.worst = Some(format!("p = {}, q = {}, sample {s}", POWER_EXPONENTS[i], POWER_EXPONENTS[j]));
                }
            }
        }
    }
    let passed = section.max_violation <= MEAN_SLACK;
    let detail = format!("{} comparisons, max M_p - M_q = {:e}", section.comparisons, section.max_violation);
    Ok((section, Outcome { id: 1, name: "power-mean order", passed, detail }))
}

fn direct_check(lo: &Generator, hi: &Generator, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..DIRECT_SAMPLES {
        let s = WeightedSample::random(rng, lo.domain(), 2 + k % 5);
        worst = worst.max(quasi_mean(lo, &s)? - quasi_mean(hi, &s)?);
    }
    Ok(worst)
}

fn pair_outcome(p: &corpus::Pair, settings: &Settings, rng: &mut ChaCha8Rng) -> Result<PairOutcome> {
    let (f, g) = (gen(p.f, p.domain, settings)?, gen(p.g, p.domain, settings)?);
    let mut out = PairOutcome {
        f: p.f.to_string(),
        g: p.g.to_string(),
        domain: p.domain.to_string(),
        relation: None,
        error: None,
        alpha: None,
        beta: None,
        direct_samples: 0,
        direct_max_violation: None,
        witness_gaps: None,
        confirmed: false,
    };
    let v = match compare(&f, &g, settings) {
        Ok(v) => v,
        Err(e) => {
            out.error = Some(e.to_string());
            return Ok(out);
        }
    };
    out.relation = Some(v.relation);
    match v.relation {
        Relation::Less | Relation::Greater => {
            let (lo, hi) = if v.relation == Relation::Less { (&f, &g) } else { (&g, &f) };
            let worst = direct_check(lo, hi, rng)?;
            out.direct_samples = DIRECT_SAMPLES;
            out.direct_max_violation = Some(worst);
            out.confirmed = worst <= MEAN_SLACK;
        }
        Relation::Equal => {
            let fit = v.affine.as_ref();
            out.alpha = fit.map(|a| a.alpha);
            out.beta = fit.map(|a| a.beta);
            let worst = direct_check(&f, &g, rng)?.max(direct_check(&g, &f, rng)?);
            out.direct_samples = 2 * DIRECT_SAMPLES;
            out.direct_max_violation = Some(worst);
            out.confirmed = worst <= MEAN_SLACK;
        }
        Relation::Incomparable => {
            if let (Some(a), Some(b)) = (&v.witness_le_violated, &v.witness_ge_violated) {
                let gap = |s| Ok::<f64, QamError>(quasi_mean(&f, s)? - quasi_mean(&g, s)?);
                let (ga, gb) = (gap(a)?, gap(b)?);
                out.witness_gaps = Some((ga, gb));
                out.confirmed = ga > 0.0 && gb < 0.0;
            }
        }
    }
    Ok(out)
}

fn pairs(settings: &Settings) -> Result<(Vec<PairOutcome>, Outcome)> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.stream_seed(STREAM_PAIRS));
    let pairs = corpus::pairs();
    let out = pairs.iter().map(|p| pair_outcome(p, settings, &mut rng)).collect::<Result<Vec<_>>>()?;
    let conflicts = out.iter().filter(|o| o.error.is_some()).count();
    let unconfirmed = out.iter().filter(|o| o.error.is_none() && !o.confirmed).count();
    let less = out.iter().filter(|o| matches!(o.relation, Some(Relation::Less | Relation::Greater))).count();
    let passed = out.len() >= 20 && conflicts == 0 && unconfirmed == 0;
    let detail = format!("{} pairs, {less} ordered, {conflicts} errors, {unconfirmed} unconfirmed", out.len());
    Ok((out, Outcome { id: 2, name: "criteria equivalence", passed, detail }))
}

fn show(v: Option<f64>) -> String {
    v.map_or_else(|| "none".into(), |v| v.to_string())
}

fn rel_error(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}

fn affine(settings: &Settings) -> Result<(Vec<AffineCase>, Outcome)> {
    let mut rng = ChaCha8Rng::seed_from_u64(settings.stream_seed(STREAM_AFFINE));
    let mut cases = Vec::with_capacity(AFFINE_CASES);
    for k in 0..AFFINE_CASES {
        let text = corpus::CATALOGUE[k % corpus::CATALOGUE.len()];
        let f = gen(text, corpus::CATALOGUE_DOMAIN, settings)?;
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let alpha = sign * 10f64.powf(rng.gen_range(-1.0..1.0));
        let beta = rng.gen_range(-5.0..5.0);
        let g = Generator::with_settings(GeneratorExpr::affine(alpha, beta, f.expr().clone()), *f.domain(), settings)?;
        let v = compare(&f, &g, settings).ok();
        let fit = v.as_ref().and_then(|v| v.affine);
        let (ea, eb) = (fit.as_ref().map(|a| rel_error(a.alpha, alpha)), fit.as_ref().map(|a| rel_error(a.beta, beta)));
        let passed = v.as_ref().map(|v| v.relation) == Some(Relation::Equal)
            && ea.is_some_and(|e| e <= AFFINE_REL_TOL)
            && eb.is_some_and(|e| e <= AFFINE_REL_TOL);
        cases.push(AffineCase {
            f: text.to_string(),
            alpha,
            beta,
            relation: v.map(|v| v.relation),
            recovered_alpha: fit.as_ref().map(|a| a.alpha),
            recovered_beta: fit.as_ref().map(|a| a.beta),
            alpha_rel_error: ea,
            beta_rel_error: eb,
            passed,
        });
    }
    let failed = cases.iter().filter(|c| !c.passed).count();
    let worst = cases
        .iter()
        .filter_map(|c| Some(c.alpha_rel_error?.max(c.beta_rel_error?)))
        .fold(0.0, f64::max);
    let detail = format!("{AFFINE_CASES} cases, {failed} failed, max relative error {worst:e}");
    Ok((cases, Outcome { id: 3, name: "affine equality", passed: failed == 0, detail }))
}

fn piecewise_example(settings: &Settings) -> Result<(PiecewiseExampleSection, Outcome)> {
    let d = "(0,2)";
    let (f, h, g) = (gen("id", d, settings)?, gen(PIECEWISE_H, d, settings)?, gen("pow(2)", d, settings)?);
    let sandwich = verify_sandwich(&f, &h, &g, settings)?;
    let x0 = 1.0;
    let probe = smoothness_probe(&f, &h, &g, x0, settings)?;
    let value = |r: &crate::intervals::SideReading| r.estimate().map(|e| e.value);
    let section = PiecewiseExampleSection {
        domain: d.to_string(),
        f: "id".into(),
        h: PIECEWISE_H.into(),
        g: "pow(2)".into(),
        sandwich_passed: sandwich.passed,
        sandwich_samples: sandwich.samples_checked,
        sandwich_violations: sandwich.violations,
        x0,
        slope_left: value(&probe.h_left),
        slope_right: value(&probe.h_right),
        curvature_left: value(&probe.h_left_second),
        curvature_right: value(&probe.h_right_second),
        smoothness_consistent: probe.consistent,
    };
    let near_one = |v: Option<f64>| v.is_some_and(|v| (v - 1.0).abs() <= SLOPE_TOL);
    let jump = match (section.curvature_left, section.curvature_right) {
        (Some(l), Some(r)) => (r - l).abs(),
        _ => f64::NAN,
    };
    let passed = section.sandwich_passed
        && section.sandwich_samples >= 1000
        && near_one(section.slope_left)
        && near_one(section.slope_right)
        && jump >= CURVATURE_JUMP;
    let detail = format!(
        "sandwich {} on {} samples, h' = {} / {}, h'' jump {jump}",
        if section.sandwich_passed { "holds" } else { "fails" },
        section.sandwich_samples,
        show(section.slope_left),
        show(section.slope_right)
    );
    Ok((section, Outcome { id: 4, name: "piecewise example", passed, detail }))
}

fn witness(settings: &Settings) -> Result<(WitnessSection, Outcome)> {
    let d = "(-1,1)";
    let (f, g) = (gen("pow(3)", d, settings)?, gen("id", d, settings)?);
    let x0 = 0.0;
    let mut section = WitnessSection {
        f: "pow(3)".into(),
        g: "id".into(),
        domain: d.into(),
        x0,
        error: None,
        s_plus: None,
        s_minus: None,
        gap_plus: None,
        gap_minus: None,
    };
    match find_incomparability_witness(&f, &g, x0, settings) {
        Ok((sp, sm)) => {
            section.gap_plus = Some(quasi_mean(&f, &sp)? - quasi_mean(&g, &sp)?);
            section.gap_minus = Some(quasi_mean(&f, &sm)? - quasi_mean(&g, &sm)?);
            section.s_plus = Some(sp);
            section.s_minus = Some(sm);
        }
        Err(e) => section.error = Some(e.to_string()),
    }
    let half = |s: &Option<WeightedSample>| s.as_ref().is_some_and(|s| s.len() == 2 && s.weights().iter().all(|&w| w == 0.5));
    let passed = half(&section.s_plus)
        && half(&section.s_minus)
        && section.gap_plus.is_some_and(|v| v >= WITNESS_MIN_GAP)
        && section.gap_minus.is_some_and(|v| v <= -WITNESS_MIN_GAP);
    let detail = format!("gaps {} and {}", show(section.gap_plus), show(section.gap_minus));
    Ok((section, Outcome { id: 5, name: "incomparability witness", passed, detail }))
}

fn mikusinski(settings: &Settings) -> Result<(MikusinskiSection, Outcome)> {
    let d = "(-1,1)";
    let domain: Domain = d.parse()?;
    let rates: Vec<f64> = linspace(-2.0, 2.0, 21).into_iter().filter(|&l| l != 0.0).collect();
    let points = linspace(-0.9, 0.9, 10);
    let mut max_err: f64 = 0.0;
    for &l in &rates {
        let g = Generator::with_settings(exponential_family(l), domain, settings)?;
        for &x in &points {
            max_err = max_err.max((mikusinski_index(&g, x)? - l).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(settings.stream_seed(STREAM_EXP_MEANS));
    let mut worst = f64::NEG_INFINITY;
    for k in 0..EXP_MEAN_SAMPLES {
        let s = WeightedSample::random(&mut rng, &domain, 2 + k % 5);
        let means = rates.iter().map(|&l| exponential_mean(l, &s)).collect::<Result<Vec<_>>>()?;
        for w in means.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    let section = MikusinskiSection {
        domain: d.into(),
        rates,
        points,
        max_index_error: max_err,
        mean_samples: EXP_MEAN_SAMPLES,
        max_order_violation: worst,
    };
    let passed = max_err <= INDEX_TOL && worst <= MEAN_SLACK;
    let detail = format!("max index error {max_err:e}, max order violation {worst:e}");
    Ok((section, Outcome { id: 6, name: "index coherence", passed, detail }))
}

fn hull(settings: &Settings) -> Result<(Vec<HullCase>, Outcome)> {
    let mut cases = Vec::new();
    for c in corpus::WINDOW_SUITE {
        let h = gen(c.gen, c.domain, settings)?;
        let w = MikusinskiWindow::parse(c.x0.parse().map_err(|_| QamError::InvalidParameter(c.x0.into()))?, c.u)?;
        let mut case = HullCase {
            gen: c.gen.into(),
            domain: c.domain.into(),
            window: w.to_string(),
            window_membership: None,
            hull: None,
            error: None,
            certificate_verified: None,
        };
        match (window_membership(&h, &w), hull_membership_exponential(&h, &w, settings)) {
            (Ok(m), Ok(hm)) => {
                case.window_membership = Some(m);
                case.hull = Some(hm);
                if let HullMembership::Member { lambda_lo, lambda_hi } = hm {
                    let lo = Generator::with_settings(exponential_family(lambda_lo), *h.domain(), settings)?;
                    let hi = Generator::with_settings(exponential_family(lambda_hi), *h.domain(), settings)?;
                    case.certificate_verified = Some(w.admits(lambda_lo) && w.admits(lambda_hi) && verify_sandwich(&lo, &h, &hi, settings)?.passed);
                }
            }
            (Err(e), _) | (_, Err(e)) => case.error = Some(e.to_string()),
        }
        cases.push(case);
    }
    let members = cases.iter().filter(|c| matches!(c.hull, Some(HullMembership::Member { .. }))).count();
    let unverified = cases.iter().filter(|c| c.certificate_verified == Some(false)).count();
    let errors = cases.iter().filter(|c| c.error.is_some()).count();
    let log_unknown = cases
        .iter()
        .any(|c| c.gen == "log" && c.domain == "(0.5,2)" && c.window == "x0=1 U=[0,2]" && c.hull == Some(HullMembership::Unknown));
    let passed = unverified == 0 && errors == 0 && log_unknown;
    let detail = format!("{} windows, {members} members, {unverified} unverified, log on [0,2] unknown: {log_unknown}", cases.len());
    Ok((cases, Outcome { id: 7, name: "hull soundness", passed, detail }))
}

fn pin_outcome(f: &Generator, h: &Generator, g: &Generator, x0: f64, x1: f64, settings: &Settings) -> Result<PinOutcome> {
    let env = sandwich_envelope(f, g, x0, x1, settings)?;
    let seg = &env.inner;
    let last = seg.xs.len() - 1;
    let pinned = seg.lower[0] == 0.0 && seg.upper[0] == 0.0 && seg.lower[last] == 1.0 && seg.upper[last] == 1.0;
    let (mut min_slack, mut worst_x) = (f64::INFINITY, f64::NAN);
    for (i, &x) in seg.xs.iter().enumerate() {
        let v = normalized(h, x0, x1, x);
        let slack = (v - seg.lower[i]).min(seg.upper[i] - v);
        if slack < min_slack {
            (min_slack, worst_x) = (slack, x);
        }
    }
    Ok(PinOutcome { x0, x1, grid_points: seg.xs.len(), pinned, min_slack, worst_x })
}

fn envelope(settings: &Settings) -> Result<(Vec<PinOutcome>, Outcome)> {
    let d = "(0,2)";
    let (f, h, g) = (gen("id", d, settings)?, gen(PIECEWISE_H, d, settings)?, gen("pow(2)", d, settings)?);
    let pins = corpus::PINS
        .iter()
        .map(|&(a, b)| pin_outcome(&f, &h, &g, a, b, settings))
        .collect::<Result<Vec<_>>>()?;
    let worst = pins.iter().map(|p| p.min_slack).fold(f64::INFINITY, f64::min);
    let passed = pins.iter().all(|p| p.pinned && p.grid_points == 513 && p.min_slack >= ENVELOPE_SLACK);
    let detail = format!("{} pin pairs, min slack {worst:e}", pins.len());
    Ok((pins, Outcome { id: 8, name: "envelope containment", passed, detail }))
}

fn triples(settings: &Settings) -> Result<Vec<TripleOutcome>> {
    corpus::TRIPLES
        .iter()
        .map(|t| {
            let (f, h, g) = (gen(t.f, t.domain, settings)?, gen(t.h, t.domain, settings)?, gen(t.g, t.domain, settings)?);
            let r = verify_sandwich(&f, &h, &g, settings)?;
            let min_pin_slack = r.pins.iter().map(|p| p.min_slack).fold(f64::INFINITY, f64::min);
            Ok(TripleOutcome {
                f: t.f.into(),
                h: t.h.into(),
                g: t.g.into(),
                domain: t.domain.into(),
                sandwich_passed: r.passed,
                violations: r.violations,
                min_pin_slack,
            })
        })
        .collect()
}

/// Runs every corpus check under `settings`.
pub fn run_conformance(settings: &Settings) -> Result<ConformanceReport> {
    let (power_order, o1) = power_order(settings)?;
    let (pairs, o2) = pairs(settings)?;
    let (affine, o3) = affine(settings)?;
    let (piecewise_example, o4) = piecewise_example(settings)?;
    let (witness, o5) = witness(settings)?;
    let (mikusinski, o6) = mikusinski(settings)?;
    let (hull, o7) = hull(settings)?;
    let (envelope, o8) = envelope(settings)?;
    Ok(ConformanceReport {
        seed: settings.seed,
        grid_n: settings.grid_n,
        tolerances: settings.tol,
        outcomes: vec![o1, o2, o3, o4, o5, o6, o7, o8],
        power_order,
        pairs,
        affine,
        piecewise_example,
        witness,
        mikusinski,
        hull,
        envelope,
        triples: triples(settings)?,
    })
}

