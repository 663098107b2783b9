//! The generator expression language.
//!
//! ```text
//! expr := "id" | "log" | "pow(" num ")" | "exp(" num ")"
//!       | "affine(" num "," num "," expr ")" | "neg(" expr ")"
//!       | "piecewise(" num ";" expr ";" expr ")"
//! ```
//!
//! Whitespace is ignored everywhere.

use std::fmt;
use std::str::FromStr;

use crate::error::{QamError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorExpr {
    Identity,
    /// `x^p`, `p != 0`.
    Power(f64),
    Log,
    /// `e^(lambda x)`, `lambda != 0`.
    Exp(f64),
    /// `alpha * inner + beta`, `alpha != 0`.
    Affine {
        alpha: f64,
        beta: f64,
        inner: Box<GeneratorExpr>,
    },
    Negate(Box<GeneratorExpr>),
    /// `left` below `cut`, `right` above it; the right branch is shifted
    /// vertically at compile time to meet `left` at `cut`.
    Piecewise {
        cut: f64,
        left: Box<GeneratorExpr>,
        right: Box<GeneratorExpr>,
    },
}

impl GeneratorExpr {
    /// `pow(0)` is the logarithm.
    pub fn power(p: f64) -> Self {
        if p == 0.0 {
            GeneratorExpr::Log
        } else {
            GeneratorExpr::Power(p)
        }
    }

    pub fn affine(alpha: f64, beta: f64, inner: GeneratorExpr) -> Self {
        GeneratorExpr::Affine {
            alpha,
            beta,
            inner: Box::new(inner),
        }
    }

    pub fn negate(inner: GeneratorExpr) -> Self {
        GeneratorExpr::Negate(Box::new(inner))
    }

    pub fn piecewise(cut: f64, left: GeneratorExpr, right: GeneratorExpr) -> Self {
        GeneratorExpr::Piecewise {
            cut,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Strips outer affine maps and negations, which never change the mean.
    pub fn mean_core(&self) -> &GeneratorExpr {
        match self {
            GeneratorExpr::Affine { inner, .. } | GeneratorExpr::Negate(inner) => {
                inner.mean_core()
            }
            other => other,
        }
    }

    pub fn contains_piecewise(&self) -> bool {
        match self {
            GeneratorExpr::Piecewise { .. } => true,
            GeneratorExpr::Affine { inner, .. } | GeneratorExpr::Negate(inner) => {
                inner.contains_piecewise()
            }
            _ => false,
        }
    }
}

impl fmt::Display for GeneratorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorExpr::Identity => f.write_str("id"),
            GeneratorExpr::Power(p) => write!(f, "pow({p})"),
            GeneratorExpr::Log => f.write_str("log"),
            GeneratorExpr::Exp(l) => write!(f, "exp({l})"),
            GeneratorExpr::Affine { alpha, beta, inner } => {
                write!(f, "affine({alpha},{beta},{inner})")
            }
            GeneratorExpr::Negate(inner) => write!(f, "neg({inner})"),
            GeneratorExpr::Piecewise { cut, left, right } => {
                write!(f, "piecewise({cut};{left};{right})")
            }
        }
    }
}

impl FromStr for GeneratorExpr {
    type Err = QamError;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> QamError {
        QamError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn ident(&mut self) -> Result<&str> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a generator name"));
        }
        // ASCII letters only, so this cannot fail.
        Ok(std::str::from_utf8(&self.src[start..self.pos]).unwrap())
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            let sign_ok = (c == b'+' || c == b'-')
                && (self.pos == start || matches!(self.src[self.pos - 1], b'e' | b'E'));
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || sign_ok {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| QamError::Parse {
                pos: start,
                msg: format!("bad number {text:?}"),
            })
    }

    fn expr(&mut self) -> Result<GeneratorExpr> {
        let start = self.pos;
        let name = self.ident()?.to_string();
        let e = match name.as_str() {
            "id" => GeneratorExpr::Identity,
            "log" => GeneratorExpr::Log,
            "pow" => {
                self.expect(b'(')?;
                let p = self.number()?;
                self.expect(b')')?;
                GeneratorExpr::power(p)
            }
            "exp" => {
                self.expect(b'(')?;
                let l = self.number()?;
                self.expect(b')')?;
                GeneratorExpr::Exp(l)
            }
            "affine" => {
                self.expect(b'(')?;
                let alpha = self.number()?;
                self.expect(b',')?;
                let beta = self.number()?;
                self.expect(b',')?;
                let inner = self.expr()?;
                self.expect(b')')?;
                GeneratorExpr::affine(alpha, beta, inner)
            }
            "neg" => {
                self.expect(b'(')?;
                let inner = self.expr()?;
                self.expect(b')')?;
                GeneratorExpr::negate(inner)
            }
            "piecewise" => {
                self.expect(b'(')?;
                let cut = self.number()?;
                self.expect(b';')?;
                let left = self.expr()?;
                self.expect(b';')?;
                let right = self.expr()?;
                self.expect(b')')?;
                GeneratorExpr::piecewise(cut, left, right)
            }
            other => {
                return Err(QamError::Parse {
                    pos: start,
                    msg: format!("unknown generator {other:?}"),
                })
            }
        };
        Ok(e)
    }
}
