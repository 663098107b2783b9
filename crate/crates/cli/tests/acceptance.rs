//! End-to-end acceptance checks. Each criterion is recomputed here with
//! oracles written independently of the library, then the binary's
//! conformance report is checked for determinism and agreement.

use std::process::{Command, ExitCode};

use qam_core::corpus::{self, PIECEWISE_H};
use qam_core::intervals::{
    exponential_family, hull_membership_exponential, sandwich_envelope, smoothness_probe, verify_sandwich,
    HullMembership, MikusinskiWindow,
};
use qam_core::{
    compare, exponential_mean, find_incomparability_witness, mikusinski_index, parse_generator, power_mean, quasi_mean,
    Domain, Generator, GeneratorExpr, QamError, Relation, Settings, WeightedSample,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Check = (&'static str, fn() -> Verdict);

fn gen(text: &str, d: &str) -> Generator {
    parse_generator(text, d.parse().unwrap()).unwrap()
}

fn random_sample(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> WeightedSample {
    let points: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    WeightedSample::new(points, raw.iter().map(|w| w / total).collect()).unwrap()
}

fn pairs(s: &WeightedSample) -> impl Iterator<Item = (f64, f64)> + '_ {
    s.points().iter().copied().zip(s.weights().iter().copied())
}

/// Weighted power mean from its definition.
fn power_oracle(p: f64, s: &WeightedSample) -> f64 {
    if p == 0.0 {
        pairs(s).map(|(x, w)| w * x.ln()).sum::<f64>().exp()
    } else {
        pairs(s).map(|(x, w)| w * x.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn exp_oracle(l: f64, s: &WeightedSample) -> f64 {
    pairs(s).map(|(x, w)| w * (l * x).exp()).sum::<f64>().ln() / l
}

/// Quasi-arithmetic mean by bisection on generator values.
fn mean_oracle(g: &Generator, s: &WeightedSample) -> f64 {
    let target: f64 = pairs(s).map(|(x, w)| w * g.eval(x).unwrap()).sum();
    let (mut a, mut b) = (s.min(), s.max());
    let up = g.eval(b).unwrap() >= g.eval(a).unwrap();
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (g.eval(m).unwrap() < target) == up {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn ensure(ok: bool, msg: String) -> Verdict {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn power_mean_order() -> Verdict {
    let exps = [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0];
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst, mut oracle_gap) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..1000 {
        let n = rng.gen_range(2..=6);
        let s = random_sample(&mut rng, 0.01, 100.0, n);
        let m: Vec<f64> = exps.iter().map(|&p| power_mean(p, &s).unwrap()).collect();
        for (i, &p) in exps.iter().enumerate() {
            let o = power_oracle(p, &s);
            oracle_gap = oracle_gap.max((m[i] - o).abs() / o);
            for j in i + 1..exps.len() {
                worst = worst.max(m[i] - m[j]);
            }
        }
    }
    ensure(
        worst <= 1e-10 && oracle_gap <= 1e-12,
        format!("max M_p - M_q = {worst:e} (limit 1e-10), max relative gap to definition {oracle_gap:e}"),
    )
}

fn criteria_equivalence() -> Verdict {
    let settings = Settings::default();
    let list = corpus::pairs();
    let names: String = list.iter().map(|p| format!("{} {}", p.f, p.g)).collect();
    for needle in ["id", "pow(", "log", "exp(", PIECEWISE_H] {
        if !names.contains(needle) {
            return Err(format!("corpus lacks {needle}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let (mut ordered, mut worst) = (0, f64::NEG_INFINITY);
    for p in &list {
        let (f, g) = (gen(p.f, p.domain), gen(p.g, p.domain));
        let v = match compare(&f, &g, &settings) {
            Ok(v) => v,
            Err(e @ QamError::CriteriaConflict(_)) => return Err(format!("{} vs {}: {e}", p.f, p.g)),
            Err(e) => return Err(format!("{} vs {}: unexpected {e}", p.f, p.g)),
        };
        let (lo, hi) = match v.relation {
            Relation::Less => (&f, &g),
            Relation::Greater => (&g, &f),
            _ => continue,
        };
        ordered += 1;
        let d = f.domain();
        for k in 0..1000 {
            let s = random_sample(&mut rng, d.sample_lo(), d.sample_hi(), 1 + k % 6);
            let gap_lib = quasi_mean(lo, &s).unwrap() - quasi_mean(hi, &s).unwrap();
            let gap_oracle = mean_oracle(lo, &s) - mean_oracle(hi, &s);
            worst = worst.max(gap_lib).max(gap_oracle);
        }
    }
    ensure(
        list.len() >= 20 && worst <= 1e-10,
        format!("{} pairs, no conflicts, {ordered} ordered verdicts, max direct violation {worst:e} (limit 1e-10)", list.len()),
    )
}

fn affine_equality() -> Verdict {
    let settings = Settings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = 0.0f64;
    for k in 0..50 {
        let f = gen(corpus::CATALOGUE[k % corpus::CATALOGUE.len()], corpus::CATALOGUE_DOMAIN);
        let alpha = rng.gen_range(0.2..8.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let beta = rng.gen_range(-10.0..10.0);
        let g = Generator::new(GeneratorExpr::affine(alpha, beta, f.expr().clone()), *f.domain()).unwrap();
        let v = compare(&f, &g, &settings).map_err(|e| format!("{} : {e}", g.expr()))?;
        let fit = match (v.relation, v.affine) {
            (Relation::Equal, Some(fit)) => fit,
            (r, _) => return Err(format!("{} gave {r:?}", g.expr())),
        };
        worst = worst
            .max((fit.alpha - alpha).abs() / alpha.abs())
            .max((fit.beta - beta).abs() / beta.abs().max(1.0));
    }
    ensure(worst <= 1e-9, format!("50 cases Equal, max relative parameter error {worst:e} (limit 1e-9)"))
}

fn piecewise_example() -> Verdict {
    let settings = Settings::default();
    let (f, h, g) = (gen("id", "(0,2)"), gen(PIECEWISE_H, "(0,2)"), gen("pow(2)", "(0,2)"));
    let r = verify_sandwich(&f, &h, &g, &settings).map_err(|e| e.to_string())?;
    if !r.passed || r.samples_checked < 1000 {
        return Err(format!("sandwich failed on {} samples: {:?}", r.samples_checked, r.violations));
    }
    let p = smoothness_probe(&f, &h, &g, 1.0, &settings).map_err(|e| e.to_string())?;
    let v = |x: &qam_core::intervals::SideReading| x.estimate().map(|e| e.value).unwrap_or(f64::NAN);
    let (l1, r1, l2, r2) = (v(&p.h_left), v(&p.h_right), v(&p.h_left_second), v(&p.h_right_second));
    ensure(
        (l1 - 1.0).abs() <= 1e-4 && (r1 - 1.0).abs() <= 1e-4 && (r2 - l2).abs() >= 0.5 && l2.abs() < 0.1 && (r2 - 1.0).abs() < 0.1,
        format!("sandwich holds on {} samples; h' = {l1} / {r1}; h'' = {l2} / {r2}", r.samples_checked),
    )
}

fn crossing_witness() -> Verdict {
    let (g, h) = (gen("pow(3)", "(-1,1)"), gen("id", "(-1,1)"));
    let (sp, sm) = find_incomparability_witness(&g, &h, 0.0, &Settings::default()).map_err(|e| e.to_string())?;
    let half = |s: &WeightedSample| s.len() == 2 && s.weights() == [0.5, 0.5];
    let gp = mean_oracle(&g, &sp) - mean_oracle(&h, &sp);
    let gm = mean_oracle(&g, &sm) - mean_oracle(&h, &sm);
    ensure(
        half(&sp) && half(&sm) && gp >= 1e-3 && gm <= -1e-3,
        format!("witnesses {sp} (gap {gp:.6}) and {sm} (gap {gm:.6}), limit 1e-3"),
    )
}

fn index_coherence() -> Verdict {
    let d: Domain = "(-1,1)".parse().unwrap();
    let rates: Vec<f64> = (0..21).map(|k| -2.0 + 0.2 * k as f64).filter(|l: &f64| l.abs() > 1e-9).collect();
    let xs: Vec<f64> = (0..10).map(|k| -0.9 + 0.2 * k as f64).collect();
    let mut worst_index = 0.0f64;
    for &l in &rates {
        let g = Generator::new(exponential_family(l), d).unwrap();
        for &x in &xs {
            worst_index = worst_index.max((mikusinski_index(&g, x).unwrap() - l).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let (mut worst_order, mut oracle_gap) = (f64::NEG_INFINITY, 0.0f64);
    for k in 0..500 {
        let s = random_sample(&mut rng, -1.0, 1.0, 2 + k % 5);
        let m: Vec<f64> = rates.iter().map(|&l| exponential_mean(l, &s).unwrap()).collect();
        for (i, &l) in rates.iter().enumerate() {
            oracle_gap = oracle_gap.max((m[i] - exp_oracle(l, &s)).abs());
        }
        for w in m.windows(2) {
            worst_order = worst_order.max(w[0] - w[1]);
        }
    }
    ensure(
        worst_index <= 1e-12 && worst_order <= 1e-10 && oracle_gap <= 1e-12,
        format!(
            "{} rates x 10 points, max index error {worst_index:e}; 500 samples, max order violation {worst_order:e}",
            rates.len()
        ),
    )
}

fn hull_soundness() -> Verdict {
    let settings = Settings::default();
    let (mut members, mut log_unknown) = (0, false);
    for c in corpus::WINDOW_SUITE {
        let h = gen(c.gen, c.domain);
        let w = MikusinskiWindow::parse(c.x0.parse().unwrap(), c.u).unwrap();
        match hull_membership_exponential(&h, &w, &settings).map_err(|e| e.to_string())? {
            HullMembership::Member { lambda_lo, lambda_hi } => {
                members += 1;
                let lo = Generator::new(exponential_family(lambda_lo), *h.domain()).unwrap();
                let hi = Generator::new(exponential_family(lambda_hi), *h.domain()).unwrap();
                let r = verify_sandwich(&lo, &h, &hi, &settings).map_err(|e| e.to_string())?;
                if !r.passed || !w.admits(lambda_lo) || !w.admits(lambda_hi) {
                    return Err(format!("{} in {w}: certificate ({lambda_lo}, {lambda_hi}) fails {:?}", c.gen, r.violations));
                }
            }
            HullMembership::Unknown => {
                if c.gen == "log" && c.domain == "(0.5,2)" && c.x0 == "1" && c.u == "[0,2]" {
                    log_unknown = true;
                }
            }
        }
    }
    ensure(
        log_unknown,
        format!("{} windows, {members} members all certified, log with U = [0,2] is Unknown: {log_unknown}", corpus::WINDOW_SUITE.len()),
    )
}

fn envelope_containment() -> Verdict {
    let settings = Settings::default();
    let (f, h, g) = (gen("id", "(0,2)"), gen(PIECEWISE_H, "(0,2)"), gen("pow(2)", "(0,2)"));
    // h written out by hand: x below 1, (1 + x^2) / 2 above.
    let h_formula = |x: f64| if x <= 1.0 { x } else { 0.5 + 0.5 * x * x };
    let mut worst = f64::INFINITY;
    for (x0, x1) in corpus::PINS {
        let env = sandwich_envelope(&f, &g, x0, x1, &settings).map_err(|e| e.to_string())?;
        if env.inner.xs.len() != 513 {
            return Err(format!("envelope has {} points", env.inner.xs.len()));
        }
        for (i, &x) in env.inner.xs.iter().enumerate() {
            let hn = (h_formula(x) - h_formula(x0)) / (h_formula(x1) - h_formula(x0));
            let lib = (h.eval(x).unwrap() - h.eval(x0).unwrap()) / (h.eval(x1).unwrap() - h.eval(x0).unwrap());
            let lower = (x * x - x0 * x0) / (x1 * x1 - x0 * x0);
            let upper = (x - x0) / (x1 - x0);
            if (env.inner.lower[i] - lower).abs() > 1e-12 || (env.inner.upper[i] - upper).abs() > 1e-12 || (hn - lib).abs() > 1e-12 {
                return Err(format!("envelope or h disagrees with closed form at {x} for pins ({x0}, {x1})"));
            }
            worst = worst.min((hn - env.inner.lower[i]).min(env.inner.upper[i] - hn));
        }
    }
    ensure(worst >= -1e-9, format!("10 pin pairs x 513 points, min slack {worst:e} (limit -1e-9)"))
}

fn run_report(extra: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qam"))
        .args(["report", "--format", "json"])
        .args(extra)
        .env_remove("QAM_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("report exited with {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn determinism() -> Verdict {
    let a = run_report(&["--seed", "12345"])?;
    let b = run_report(&["--seed", "12345"])?;
    if a != b {
        return Err("two runs with seed 12345 differ".into());
    }
    let report: serde_json::Value = serde_json::from_slice(&a).map_err(|e| e.to_string())?;
    let outcomes = report["outcomes"].as_array().ok_or("report lacks outcomes")?;
    let failing: Vec<String> = outcomes
        .iter()
        .filter(|o| o["passed"] != serde_json::Value::Bool(true))
        .map(|o| o["name"].to_string())
        .collect();
    ensure(
        report["seed"] == 12345 && outcomes.len() == 8 && failing.is_empty(),
        format!("{} identical bytes over two runs; report outcomes failing: {failing:?}", a.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [Check; 9] = [
        ("power-mean order", power_mean_order),
        ("criteria equivalence", criteria_equivalence),
        ("affine equality", affine_equality),
        ("piecewise example", piecewise_example),
        ("incomparability witness", crossing_witness),
        ("index coherence", index_coherence),
        ("hull soundness", hull_soundness),
        ("envelope containment", envelope_containment),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let (tag, msg) = match check() {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {} {tag} {name}: {msg} [{:.1}s]", i + 1, started.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
