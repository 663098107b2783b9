mod num;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use num::{g17, opt};
use qam_core::conformance::{run_conformance, ConformanceReport};
use qam_core::intervals::{
    hull_membership_exponential, sandwich_envelope, smoothness_probe, verify_sandwich, window_membership,
    HullMembership, MikusinskiWindow, SandwichReport, SideReading, SmoothnessReport,
};
use qam_core::generator::parse_generator_with;
use qam_core::settings::{DEFAULT_GRID_N, DEFAULT_SEED, MIN_GRID_N};
use qam_core::{
    compare, find_incomparability_witness, mikusinski_index, quasi_mean, ComparisonVerdict,
    Domain, Generator, QamError, Relation, Settings, WeightedSample,
};

const EXIT_CODES: &str = "\
Exit codes:
  0  success (including Less, Greater, Equal and hull Unknown)
  1  verification failed (sandwich or conformance report)
  2  invalid input: parse, domain, range or parameter error
  3  means are incomparable
  4  comparison criteria disagree
  5  no incomparability witness found
  6  derivative unavailable, vanishing or unstable
  7  generators are not ordered as required
  8  output could not be written";

#[derive(Parser)]
#[command(name = "qam", version, about = "Quasi-arithmetic means: evaluation, comparison and interval queries", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Working interval, e.g. "(0,10]".
    #[arg(long, global = true, default_value = "(0,10)", allow_hyphen_values = true)]
    domain: String,
    /// Points in criterion and validation grids.
    #[arg(long, global = true, default_value_t = DEFAULT_GRID_N)]
    grid: usize,
    #[arg(long = "tol.invert", global = true, value_name = "TOL", allow_hyphen_values = true)]
    tol_invert: Option<f64>,
    #[arg(long = "tol.deriv", global = true, value_name = "TOL", allow_hyphen_values = true)]
    tol_deriv: Option<f64>,
    #[arg(long = "tol.mean", global = true, value_name = "TOL", allow_hyphen_values = true)]
    tol_mean: Option<f64>,
    #[arg(long = "tol.compare", global = true, value_name = "TOL", allow_hyphen_values = true)]
    tol_compare: Option<f64>,
    #[arg(long = "tol.affine", global = true, value_name = "TOL", allow_hyphen_values = true)]
    tol_affine: Option<f64>,
    #[arg(long = "tol.denominator", global = true, value_name = "TOL", allow_hyphen_values = true)]
    tol_denominator: Option<f64>,
    /// Seed for every randomized probe plan.
    #[arg(long, global = true, env = "QAM_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Mean of a sample, e.g. --sample "1,7" or "1:0.25,7:0.75".
    Eval {
        #[arg(long)]
        gen: String,
        #[arg(long, allow_hyphen_values = true)]
        sample: String,
    },
    /// Order between the means generated by --a and --b.
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Two half-weight samples on which the means of --a and --b are ordered oppositely.
    Witness {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
    },
    /// Index f''/f' of a generator at a point.
    Index {
        #[arg(long)]
        gen: String,
        #[arg(long, allow_hyphen_values = true)]
        at: f64,
    },
    /// Whether the index at --x0 lies in --U.
    Window {
        #[arg(long)]
        gen: String,
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long = "U", allow_hyphen_values = true)]
        u: String,
    },
    /// Brackets the mean between two exponential means with rates in --U.
    Hull {
        #[arg(long)]
        gen: String,
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long = "U", allow_hyphen_values = true)]
        u: String,
    },
    /// Checks A[f] <= A[h] <= A[g]; optionally probes h's slopes at --x0 or
    /// emits the envelope for --pins "x0,x1".
    Sandwich {
        #[arg(long)]
        f: String,
        #[arg(long)]
        h: String,
        #[arg(long)]
        g: String,
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<f64>,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_pins)]
        pins: Option<(f64, f64)>,
    },
    /// Runs the bundled corpus and writes the JSON conformance report.
    Report {
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_pins(text: &str) -> Result<(f64, f64), String> {
    let (a, b) = text.split_once(',').ok_or("expected \"x0,x1\"")?;
    let p = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    Ok((p(a)?, p(b)?))
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<QamError> for Failure {
    fn from(e: QamError) -> Self {
        let code = match e {
            QamError::Parse { .. }
            | QamError::Domain(_)
            | QamError::NotMonotone { .. }
            | QamError::Range { .. }
            | QamError::InvalidParameter(_) => 2,
            QamError::CriteriaConflict(_) => 4,
            QamError::NoWitnessFound(_) => 5,
            QamError::NotDifferentiable(_) | QamError::ZeroDerivative(_) | QamError::Unstable { .. } => 6,
            QamError::NotComparable(_) => 7,
        };
        Failure::new(code, e.to_string())
    }
}

/// Resolved configuration shared by all subcommands.
struct RunConfig {
    domain: Domain,
    settings: Settings,
    format: Format,
}

impl RunConfig {
    fn from_args(a: &RunArgs) -> Result<Self, Failure> {
        let domain: Domain = a.domain.parse()?;
        if a.grid < MIN_GRID_N {
            return Err(Failure::new(2, format!("--grid must be at least {MIN_GRID_N}")));
        }
        let mut settings = Settings {
            grid_n: a.grid,
            ..Settings::default().with_seed(a.seed)
        };
        let overrides = [
            ("invert", a.tol_invert),
            ("deriv", a.tol_deriv),
            ("mean", a.tol_mean),
            ("compare", a.tol_compare),
            ("affine", a.tol_affine),
            ("denominator", a.tol_denominator),
        ];
        for (name, value) in overrides {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Failure::new(2, format!("--tol.{name} must be positive, got {v}")));
                }
                settings.tol.set(name, v);
            }
        }
        Ok(RunConfig {
            domain,
            settings,
            format: a.format,
        })
    }

    fn gen(&self, text: &str) -> Result<Generator, Failure> {
        Ok(parse_generator_with(text, self.domain, &self.settings)?)
    }
}

struct Output {
    text: String,
    code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: 0 }
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

fn csv_table<R, F>(header: &[&str], rows: impl IntoIterator<Item = R>) -> String
where
    R: IntoIterator<Item = F>,
    F: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

#[derive(Serialize)]
struct EvalOut<'a> {
    gen: &'a str,
    domain: String,
    sample: String,
    mean: f64,
}

fn cmd_eval(cfg: &RunConfig, gen: &str, sample: &str) -> Result<Output, Failure> {
    let g = cfg.gen(gen)?;
    let s: WeightedSample = sample.parse()?;
    let mean = quasi_mean(&g, &s)?;
    let row = EvalOut {
        gen,
        domain: cfg.domain.to_string(),
        sample: s.to_string(),
        mean,
    };
    Ok(Output::ok(match cfg.format {
        Format::Text => format!("{}\n", g17(mean)),
        Format::Json => json(&row),
        Format::Csv => csv_table(&["gen", "domain", "sample", "mean"], [[row.gen.to_string(), row.domain, row.sample, g17(mean)]]),
    }))
}

const CRITERION_HEADER: [&str; 6] = ["criterion", "verdict", "probes", "skipped", "max_le_violation", "max_ge_violation"];

fn criterion_rows(v: &ComparisonVerdict) -> Vec<[String; 6]> {
    v.reports
        .iter()
        .map(|r| {
            [
                format!("{:?}", r.criterion),
                format!("{:?}", r.verdict),
                r.probes.to_string(),
                r.skipped.to_string(),
                opt(r.max_le_violation),
                opt(r.max_ge_violation),
            ]
        })
        .collect()
}

fn sample_with_gap(f: &Generator, g: &Generator, s: &WeightedSample) -> Result<String, Failure> {
    let gap = quasi_mean(f, s)? - quasi_mean(g, s)?;
    Ok(format!("{s}  (A[a] - A[b] = {})", g17(gap)))
}

fn cmd_compare(cfg: &RunConfig, a: &str, b: &str) -> Result<Output, Failure> {
    let (f, g) = (cfg.gen(a)?, cfg.gen(b)?);
    let v = compare(&f, &g, &cfg.settings)?;
    let code = if v.relation == Relation::Incomparable { 3 } else { 0 };
    let text = match cfg.format {
        Format::Json => json(&v),
        Format::Csv => csv_table(&CRITERION_HEADER, criterion_rows(&v)),
        Format::Text => {
            let mut t = String::new();
            writeln!(t, "relation: {:?}", v.relation).unwrap();
            writeln!(t, "a: {}\nb: {}\ndomain: {}\nseed: {}", v.f, v.g, v.domain, v.seed).unwrap();
            if let Some(fit) = &v.affine {
                writeln!(t, "b = alpha * a + beta: alpha = {}, beta = {}", g17(fit.alpha), g17(fit.beta)).unwrap();
            }
            if let Some(s) = &v.witness_le_violated {
                writeln!(t, "witness A[a] > A[b]: {}", sample_with_gap(&f, &g, s)?).unwrap();
            }
            if let Some(s) = &v.witness_ge_violated {
                writeln!(t, "witness A[a] < A[b]: {}", sample_with_gap(&f, &g, s)?).unwrap();
            }
            let rows = criterion_rows(&v);
            if !rows.is_empty() {
                let h = CRITERION_HEADER;
                writeln!(t, "{:<22} {:<14} {:>7} {:>7} {:>24} {:>24}", h[0], h[1], h[2], h[3], h[4], h[5]).unwrap();
                for r in rows {
                    writeln!(t, "{:<22} {:<14} {:>7} {:>7} {:>24} {:>24}", r[0], r[1], r[2], r[3], r[4], r[5]).unwrap();
                }
            }
            t
        }
    };
    Ok(Output { text, code })
}

#[derive(Serialize)]
struct WitnessOut {
    a: String,
    b: String,
    domain: String,
    x0: f64,
    s_plus: WeightedSample,
    gap_plus: f64,
    s_minus: WeightedSample,
    gap_minus: f64,
    seed: u64,
}

fn cmd_witness(cfg: &RunConfig, a: &str, b: &str, x0: f64) -> Result<Output, Failure> {
    let (f, g) = (cfg.gen(a)?, cfg.gen(b)?);
    let (sp, sm) = find_incomparability_witness(&f, &g, x0, &cfg.settings)?;
    let out = WitnessOut {
        a: a.into(),
        b: b.into(),
        domain: cfg.domain.to_string(),
        x0,
        gap_plus: quasi_mean(&f, &sp)? - quasi_mean(&g, &sp)?,
        gap_minus: quasi_mean(&f, &sm)? - quasi_mean(&g, &sm)?,
        s_plus: sp,
        s_minus: sm,
        seed: cfg.settings.seed,
    };
    Ok(Output::ok(match cfg.format {
        Format::Json => json(&out),
        Format::Csv => csv_table(
            &["witness", "sample", "gap", "seed"],
            [
                ["plus".to_string(), out.s_plus.to_string(), g17(out.gap_plus), out.seed.to_string()],
                ["minus".to_string(), out.s_minus.to_string(), g17(out.gap_minus), out.seed.to_string()],
            ],
        ),
        Format::Text => format!(
            "A[a] > A[b]: {}  (gap {})\nA[a] < A[b]: {}  (gap {})\nseed: {}\n",
            out.s_plus,
            g17(out.gap_plus),
            out.s_minus,
            g17(out.gap_minus),
            out.seed
        ),
    }))
}

fn cmd_index(cfg: &RunConfig, gen: &str, at: f64) -> Result<Output, Failure> {
    let g = cfg.gen(gen)?;
    let v = mikusinski_index(&g, at)?;
    Ok(Output::ok(match cfg.format {
        Format::Json => json(&serde_json::json!({ "gen": gen, "domain": cfg.domain.to_string(), "x": at, "index": v })),
        Format::Csv => csv_table(&["gen", "domain", "x", "index"], [[gen.to_string(), cfg.domain.to_string(), g17(at), g17(v)]]),
        Format::Text => format!("{}\n", g17(v)),
    }))
}

fn cmd_window(cfg: &RunConfig, gen: &str, x0: f64, u: &str) -> Result<Output, Failure> {
    let g = cfg.gen(gen)?;
    let w = MikusinskiWindow::parse(x0, u)?;
    let m = window_membership(&g, &w)?;
    let index = mikusinski_index(&g, x0).ok();
    Ok(Output::ok(match cfg.format {
        Format::Json => json(&serde_json::json!({ "gen": gen, "window": w, "index": index, "membership": m })),
        Format::Csv => csv_table(&["gen", "x0", "U", "index", "membership"], [[gen.to_string(), g17(x0), u.to_string(), opt(index), format!("{m:?}")]]),
        Format::Text => format!("{m:?}\n"),
    }))
}

fn cmd_hull(cfg: &RunConfig, gen: &str, x0: f64, u: &str) -> Result<Output, Failure> {
    let g = cfg.gen(gen)?;
    let w = MikusinskiWindow::parse(x0, u)?;
    let m = hull_membership_exponential(&g, &w, &cfg.settings)?;
    let (lo, hi) = match m {
        HullMembership::Member { lambda_lo, lambda_hi } => (Some(lambda_lo), Some(lambda_hi)),
        HullMembership::Unknown => (None, None),
    };
    let status = if lo.is_some() { "Member" } else { "Unknown" };
    Ok(Output::ok(match cfg.format {
        Format::Json => json(&serde_json::json!({ "gen": gen, "window": w, "hull": m, "seed": cfg.settings.seed })),
        Format::Csv => csv_table(
            &["gen", "x0", "U", "membership", "lambda_lo", "lambda_hi", "seed"],
            [[gen.to_string(), g17(x0), u.to_string(), status.to_string(), opt(lo), opt(hi), cfg.settings.seed.to_string()]],
        ),
        Format::Text => match m {
            HullMembership::Member { lambda_lo, lambda_hi } => {
                format!("Member lambda_lo = {} lambda_hi = {}\nseed: {}\n", g17(lambda_lo), g17(lambda_hi), cfg.settings.seed)
            }
            HullMembership::Unknown => format!("Unknown\nseed: {}\n", cfg.settings.seed),
        },
    }))
}

#[derive(Serialize)]
struct SandwichOut {
    sandwich: SandwichReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    smoothness: Option<SmoothnessReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    envelope: Option<Vec<qam_core::intervals::EnvelopeRow>>,
}

fn reading(r: &SideReading) -> String {
    match r {
        SideReading::Estimate(e) => format!("{} +- {}", g17(e.value), g17(e.uncertainty)),
        SideReading::Unavailable(why) => format!("unavailable ({why})"),
    }
}

fn cmd_sandwich(cfg: &RunConfig, f: &str, h: &str, g: &str, x0: Option<f64>, pins: Option<(f64, f64)>) -> Result<Output, Failure> {
    let (gf, gh, gg) = (cfg.gen(f)?, cfg.gen(h)?, cfg.gen(g)?);
    let report = verify_sandwich(&gf, &gh, &gg, &cfg.settings)?;
    let smoothness = x0.map(|x| smoothness_probe(&gf, &gh, &gg, x, &cfg.settings)).transpose()?;
    let envelope = match pins {
        Some((a, b)) => Some(sandwich_envelope(&gf, &gg, a, b, &cfg.settings)?.rows(&gh)),
        None => None,
    };
    let code = if report.passed { 0 } else { 1 };
    let text = match cfg.format {
        Format::Json => json(&SandwichOut {
            sandwich: report,
            smoothness,
            envelope,
        }),
        Format::Csv => match envelope {
            Some(rows) => csv_table(
                &["x", "lower", "upper", "h_normalized"],
                rows.iter().map(|r| [r.x, r.lower, r.upper, r.h_normalized].map(g17)),
            ),
            None => csv_table(
                &["x0", "x1", "min_slack", "worst_x"],
                report.pins.iter().map(|p| [p.x0, p.x1, p.min_slack, p.worst_x].map(g17)),
            ),
        },
        Format::Text => {
            let mut t = String::new();
            writeln!(t, "sandwich: {}", if report.passed { "pass" } else { "fail" }).unwrap();
            writeln!(t, "f: {}\nh: {}\ng: {}\ndomain: {}\nseed: {}", report.f, report.h, report.g, report.domain, report.seed).unwrap();
            let rel = |r: Option<Relation>| r.map_or_else(|| "-".into(), |r| format!("{r:?}"));
            writeln!(t, "f vs h: {}\nh vs g: {}", rel(report.relation_fh), rel(report.relation_hg)).unwrap();
            let min_slack = report.pins.iter().map(|p| p.min_slack).fold(f64::INFINITY, f64::min);
            writeln!(t, "pin pairs: {} (min slack {})", report.pins.len(), if report.pins.is_empty() { "-".into() } else { g17(min_slack) }).unwrap();
            writeln!(t, "direct samples: {} (max violation {})", report.samples_checked, g17(report.max_sample_violation)).unwrap();
            for v in &report.violations {
                writeln!(t, "violation: {v}").unwrap();
            }
            if let Some(s) = &smoothness {
                writeln!(t, "smoothness at x0 = {}: prediction {:?}, {}", g17(s.x0), s.prediction, if s.consistent { "consistent" } else { "inconsistent" }).unwrap();
                writeln!(t, "  h' left:   {}\n  h' right:  {}", reading(&s.h_left), reading(&s.h_right)).unwrap();
                writeln!(t, "  h'' left:  {}\n  h'' right: {}", reading(&s.h_left_second), reading(&s.h_right_second)).unwrap();
                for n in &s.notes {
                    writeln!(t, "  note: {n}").unwrap();
                }
            }
            if let Some(rows) = &envelope {
                let worst = rows.iter().map(|r| (r.h_normalized - r.lower).min(r.upper - r.h_normalized)).fold(f64::INFINITY, f64::min);
                writeln!(t, "envelope: {} rows, min slack {}", rows.len(), g17(worst)).unwrap();
            }
            t
        }
    };
    Ok(Output { text, code })
}

fn report_summary(r: &ConformanceReport) -> String {
    let mut t = String::new();
    for o in &r.outcomes {
        writeln!(t, "[{}] {} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.name, o.detail).unwrap();
    }
    writeln!(t, "seed: {}", r.seed).unwrap();
    t
}

fn cmd_report(cfg: &RunConfig, out: Option<&PathBuf>) -> Result<Output, Failure> {
    let r = run_conformance(&cfg.settings)?;
    let code = if r.passed() { 0 } else { 1 };
    let body = match cfg.format {
        Format::Text => report_summary(&r),
        Format::Csv => csv_table(
            &["id", "name", "passed", "detail"],
            r.outcomes.iter().map(|o| [o.id.to_string(), o.name.to_string(), o.passed.to_string(), o.detail.clone()]),
        ),
        Format::Json => json(&r),
    };
    let text = match out {
        Some(path) => {
            std::fs::write(path, &body).map_err(|e| Failure::new(8, format!("{}: {e}", path.display())))?;
            report_summary(&r)
        }
        None => body,
    };
    Ok(Output { text, code })
}

fn run(cli: &Cli) -> Result<Output, Failure> {
    let cfg = RunConfig::from_args(&cli.run)?;
    match &cli.command {
        Command::Eval { gen, sample } => cmd_eval(&cfg, gen, sample),
        Command::Compare { a, b } => cmd_compare(&cfg, a, b),
        Command::Witness { a, b, x0 } => cmd_witness(&cfg, a, b, *x0),
        Command::Index { gen, at } => cmd_index(&cfg, gen, *at),
        Command::Window { gen, x0, u } => cmd_window(&cfg, gen, *x0, u),
        Command::Hull { gen, x0, u } => cmd_hull(&cfg, gen, *x0, u),
        Command::Sandwich { f, h, g, x0, pins } => cmd_sandwich(&cfg, f, h, g, *x0, *pins),
        Command::Report { out } => cmd_report(&cfg, out.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.text.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(8);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("qam: {}", f.message.lines().next().unwrap_or_default());
            ExitCode::from(f.code)
        }
    }
}
