//! Validated strictly monotone generator functions.

mod domain;
mod expr;

use std::fmt;

use serde::ser::{Serialize, SerializeStruct, Serializer};

pub use domain::{Domain, TOL_DOMAIN};
pub(crate) use domain::parse_bracketed;

pub use expr::GeneratorExpr;

use crate::error::{QamError, Result};
use crate::numeric::{linspace, richardson};
use crate::settings::{Settings, Tolerances, MIN_GRID_N};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Increasing => 1.0,
            Direction::Decreasing => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Direction::Increasing => Direction::Decreasing,
            Direction::Decreasing => Direction::Increasing,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// A one-sided derivative estimate and its extrapolation uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub uncertainty: f64,
}

/// Compiled form of a [`GeneratorExpr`] with piecewise joins resolved.
#[derive(Debug, Clone)]
enum Node {
    Identity,
    Power(f64),
    Log,
    Exp(f64),
    Affine {
        alpha: f64,
        beta: f64,
        inner: Box<Node>,
    },
    Negate(Box<Node>),
    Piecewise {
        cut: f64,
        left: Box<Node>,
        right: Box<Node>,
        shift: f64,
        d1_joined: bool,
        d2_joined: bool,
    },
}

fn powr(x: f64, p: f64) -> f64 {
    if p.fract() == 0.0 && p.abs() <= 1024.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

fn is_odd_integer(p: f64) -> bool {
    p.fract() == 0.0 && p.abs() < 1e15 && (p as i64) % 2 != 0
}

/// Lower end excludes 0 (closed at a positive value, or open at 0).
fn strictly_positive(d: &Domain) -> bool {
    d.lo > 0.0 || (d.lo == 0.0 && d.lo_open)
}

impl Node {
    fn compile(e: &GeneratorExpr, d: &Domain, tol_deriv: f64) -> Result<Node> {
        Ok(match e {
            GeneratorExpr::Identity => Node::Identity,
            GeneratorExpr::Power(p) => {
                let p = *p;
                if p == 0.0 || !p.is_finite() {
                    return Err(QamError::InvalidParameter(format!("pow({p})")));
                }
                let ok = if is_odd_integer(p) && p > 0.0 {
                    true
                } else if p > 0.0 {
                    d.lo >= 0.0
                } else {
                    strictly_positive(d)
                };
                if !ok {
                    return Err(QamError::Domain(format!("pow({p}) is not monotone or not defined on {d}")));
                }
                Node::Power(p)
            }
            GeneratorExpr::Log => {
                if !strictly_positive(d) {
                    return Err(QamError::Domain(format!("log is not defined on {d}")));
                }
                Node::Log
            }
            GeneratorExpr::Exp(l) => {
                if *l == 0.0 || !l.is_finite() {
                    return Err(QamError::InvalidParameter(format!("exp({l}) needs a nonzero rate")));
                }
                Node::Exp(*l)
            }
            GeneratorExpr::Affine { alpha, beta, inner } => {
                if *alpha == 0.0 || !alpha.is_finite() || !beta.is_finite() {
                    return Err(QamError::InvalidParameter(format!(
                        "affine({alpha},{beta},..) needs a finite nonzero slope"
                    )));
                }
                Node::Affine {
                    alpha: *alpha,
                    beta: *beta,
                    inner: Box::new(Node::compile(inner, d, tol_deriv)?),
                }
            }
            GeneratorExpr::Negate(inner) => Node::Negate(Box::new(Node::compile(inner, d, tol_deriv)?)),
            GeneratorExpr::Piecewise { cut, left, right } => {
                let cut = *cut;
                if !d.contains_interior(cut) {
                    return Err(QamError::Domain(format!("piecewise cut {cut} is not inside {d}")));
                }
                let (ld, rd) = (d.left_of(cut), d.right_of(cut));
                let left = Node::compile(left, &ld, tol_deriv)?;
                let right = Node::compile(right, &rd, tol_deriv)?;
                let shift = left.eval(cut) - right.eval(cut);
                let ldir = left.eval(cut) - left.eval(ld.sample_lo());
                let rdir = right.eval(rd.sample_hi()) - right.eval(cut);
                if !(ldir * rdir > 0.0) {
                    return Err(QamError::Domain(format!(
                        "piecewise branches around {cut} have different monotonicity"
                    )));
                }
                let joined = |order| match (left.deriv(cut, order), right.deriv(cut, order)) {
                    (Ok(a), Ok(b)) => (a - b).abs() <= tol_deriv * a.abs().max(b.abs()).max(1.0),
                    _ => false,
                };
                let d1_joined = joined(1);
                let d2_joined = d1_joined && joined(2);
                Node::Piecewise {
                    cut,
                    left: Box::new(left),
                    right: Box::new(right),
                    shift,
                    d1_joined,
                    d2_joined,
                }
            }
        })
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            Node::Identity => x,
            Node::Power(p) => powr(x, *p),
            Node::Log => x.ln(),
            Node::Exp(l) => (l * x).exp(),
            Node::Affine { alpha, beta, inner } => alpha * inner.eval(x) + beta,
            Node::Negate(inner) => -inner.eval(x),
            Node::Piecewise {
                cut,
                left,
                right,
                shift,
                ..
            } => {
                if x <= *cut {
                    left.eval(x)
                } else {
                    right.eval(x) + shift
                }
            }
        }
    }

    fn deriv(&self, x: f64, order: u8) -> Result<f64> {
        let v = match self {
            Node::Identity => {
                if order == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            Node::Power(p) => {
                if order == 1 {
                    p * powr(x, p - 1.0)
                } else {
                    p * (p - 1.0) * powr(x, p - 2.0)
                }
            }
            Node::Log => {
                if order == 1 {
                    1.0 / x
                } else {
                    -1.0 / (x * x)
                }
            }
            Node::Exp(l) => l.powi(order as i32) * (l * x).exp(),
            Node::Affine { alpha, inner, .. } => alpha * inner.deriv(x, order)?,
            Node::Negate(inner) => -inner.deriv(x, order)?,
            Node::Piecewise {
                cut,
                left,
                right,
                d1_joined,
                d2_joined,
                ..
            } => {
                if x < *cut {
                    left.deriv(x, order)?
                } else if x > *cut {
                    right.deriv(x, order)?
                } else if (order == 1 && *d1_joined) || (order == 2 && *d2_joined) {
                    left.deriv(x, order)?
                } else {
                    return Err(QamError::NotDifferentiable(format!(
                        "order-{order} derivative does not exist at the piecewise cut {cut}"
                    )));
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QamError::NotDifferentiable(format!(
                "order-{order} derivative is not finite at {x}"
            )))
        }
    }

    fn smooth(&self, order: u8) -> bool {
        match self {
            Node::Affine { inner, .. } | Node::Negate(inner) => inner.smooth(order),
            Node::Piecewise {
                left,
                right,
                d1_joined,
                d2_joined,
                ..
            } => {
                let joined = if order == 1 { *d1_joined } else { *d2_joined };
                joined && left.smooth(order) && right.smooth(order)
            }
            _ => true,
        }
    }
}

/// A continuous strictly monotone function on a [`Domain`].
#[derive(Debug, Clone)]
pub struct Generator {
    expr: GeneratorExpr,
    node: Node,
    domain: Domain,
    direction: Direction,
    d1_available: bool,
    d2_available: bool,
    tol: Tolerances,
}

impl Generator {
    /// Compiles and validates `expr` on `domain` with default settings.
    pub fn new(expr: GeneratorExpr, domain: Domain) -> Result<Self> {
        Self::with_settings(expr, domain, &Settings::default())
    }

    pub fn with_settings(expr: GeneratorExpr, domain: Domain, settings: &Settings) -> Result<Self> {
        let grid_n = settings.grid_n.max(MIN_GRID_N);
        let node = Node::compile(&expr, &domain, settings.tol.deriv)?;
        let grid = linspace(domain.sample_lo(), domain.sample_hi(), grid_n);
        let values: Vec<f64> = grid.iter().map(|&x| node.eval(x)).collect();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(QamError::Domain(format!(
                "{expr} is not finite at x = {} on {domain}",
                grid[i]
            )));
        }
        let direction = if values[1] > values[0] {
            Direction::Increasing
        } else {
            Direction::Decreasing
        };
        let s = direction.sign();
        for i in 1..grid.len() {
            if !(s * (values[i] - values[i - 1]) > 0.0) {
                return Err(QamError::NotMonotone {
                    x: grid[i - 1],
                    fx: values[i - 1],
                    y: grid[i],
                    fy: values[i],
                });
            }
        }
        let d1_available = node.smooth(1);
        let d2_available = d1_available && node.smooth(2);
        Ok(Generator {
            expr,
            node,
            domain,
            direction,
            d1_available,
            d2_available,
            tol: settings.tol,
        })
    }

    pub fn expr(&self) -> &GeneratorExpr {
        &self.expr
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn d1_available(&self) -> bool {
        self.d1_available
    }

    pub fn d2_available(&self) -> bool {
        self.d2_available
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Same expression on a different domain.
    pub fn on_domain(&self, domain: Domain) -> Result<Generator> {
        let settings = Settings {
            tol: self.tol,
            ..Settings::default()
        };
        Generator::with_settings(self.expr.clone(), domain, &settings)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.domain.check(x)?;
        Ok(self.node.eval(x))
    }

    /// Evaluation without the domain check, for points already known to be inside.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        self.node.eval(x)
    }

    /// Analytic derivative of order 1 or 2.
    pub fn derivative(&self, x: f64, order: u8) -> Result<f64> {
        if order != 1 && order != 2 {
            return Err(QamError::InvalidParameter(format!("derivative order {order}")));
        }
        self.domain.check(x)?;
        self.node.deriv(x, order)
    }

    /// Values at the two ends of the sampling range, in domain order.
    pub fn end_values(&self) -> (f64, f64) {
        (
            self.node.eval(self.domain.sample_lo()),
            self.node.eval(self.domain.sample_hi()),
        )
    }

    /// Closed hull of the attainable range, low end first.
    pub fn range(&self) -> (f64, f64) {
        let (a, b) = self.end_values();
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Richardson-extrapolated one-sided difference quotient at `x0`.
    pub fn one_sided_derivative_estimate(&self, x0: f64, side: Side, order: u8) -> Result<DerivativeEstimate> {
        if order != 1 && order != 2 {
            return Err(QamError::InvalidParameter(format!("derivative order {order}")));
        }
        self.domain.check(x0)?;
        let room = match side {
            Side::Right => self.domain.sample_hi() - x0,
            Side::Left => x0 - self.domain.sample_lo(),
        };
        if room <= 0.0 {
            return Err(QamError::Domain(format!(
                "no room on the {side:?} of x0 = {x0} inside {}",
                self.domain
            )));
        }
        let h0 = (self.domain.width() / 16.0).min(room / order as f64);
        let s = match side {
            Side::Right => 1.0,
            Side::Left => -1.0,
        };
        let f0 = self.node.eval(x0);
        let quotient = |h: f64| -> f64 {
            if order == 1 {
                s * (self.node.eval(x0 + s * h) - f0) / h
            } else {
                (self.node.eval(x0 + 2.0 * s * h) - 2.0 * self.node.eval(x0 + s * h) + f0) / (h * h)
            }
        };
        let e = richardson(quotient, h0, 10);
        if e.diverging || !e.value.is_finite() {
            return Err(QamError::Unstable {
                x: x0,
                detail: format!(
                    "{side:?} order-{order} extrapolation deltas never shrink (last estimate {})",
                    e.value
                ),
            });
        }
        Ok(DerivativeEstimate {
            value: e.value,
            uncertainty: e.uncertainty,
        })
    }

    /// Solves `g(x) = y` on the sampling range.
    pub fn invert(&self, y: f64) -> Result<f64> {
        let lo = self.domain.sample_lo();
        let hi = self.domain.sample_hi();
        let s = self.direction.sign();
        let (glo, ghi) = self.end_values();
        let slack = self.tol.invert * y.abs().max(1.0);
        // Oriented residual: increasing in x for either direction.
        let resid = |x: f64| s * (self.node.eval(x) - y);
        let (rlo, rhi) = (s * (glo - y), s * (ghi - y));
        if !y.is_finite() || rlo > slack || rhi < -slack {
            let (a, b) = self.range();
            return Err(QamError::Range { y, lo: a, hi: b });
        }
        if rlo >= 0.0 {
            return Ok(lo);
        }
        if rhi <= 0.0 {
            return Ok(hi);
        }

        let (mut a, mut b) = (lo, hi);
        let mut x = 0.5 * (a + b);
        let mut last_abs = f64::INFINITY;
        let mut best = (x, f64::INFINITY);
        for _ in 0..400 {
            let r = resid(x);
            if r.abs() < best.1 {
                best = (x, r.abs());
            }
            if r == 0.0 {
                return Ok(x);
            }
            if r < 0.0 {
                a = x;
            } else {
                b = x;
            }
            let mid = 0.5 * (a + b);
            if !(mid > a && mid < b) {
                break;
            }
            let mut next = mid;
            // Newton step while it keeps halving the residual, bisection otherwise.
            if self.d1_available && (last_abs.is_infinite() || r.abs() <= 0.5 * last_abs) {
                if let Ok(d) = self.node.deriv(x, 1) {
                    let cand = x - r / (s * d);
                    if cand > a && cand < b {
                        next = cand;
                    }
                }
            }
            last_abs = r.abs();
            if next == x {
                break;
            }
            x = next;
        }
        for c in [a, b] {
            let r = resid(c).abs();
            if r < best.1 {
                best = (c, r);
            }
        }
        Ok(best.0)
    }

    /// Increasing generator for the same mean (negation when decreasing).
    pub fn canonicalize(&self) -> Generator {
        if self.direction == Direction::Increasing {
            return self.clone();
        }
        let (expr, node) = match (&self.expr, &self.node) {
            (GeneratorExpr::Negate(e), Node::Negate(n)) => ((**e).clone(), (**n).clone()),
            _ => (
                GeneratorExpr::negate(self.expr.clone()),
                Node::Negate(Box::new(self.node.clone())),
            ),
        };
        Generator {
            expr,
            node,
            direction: Direction::Increasing,
            ..self.clone()
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}", self.expr, self.domain)
    }
}

impl Serialize for Generator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Generator", 2)?;
        st.serialize_field("expr", &self.expr.to_string())?;
        st.serialize_field("domain", &self.domain.to_string())?;
        st.end()
    }
}

/// Parses and validates a generator expression on `domain`.
pub fn parse_generator(text: &str, domain: Domain) -> Result<Generator> {
    Generator::new(text.parse()?, domain)
}

pub fn parse_generator_with(text: &str, domain: Domain, settings: &Settings) -> Result<Generator> {
    Generator::with_settings(text.parse()?, domain, settings)
}
