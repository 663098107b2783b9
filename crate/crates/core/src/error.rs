use std::fmt;

use crate::comparison::CriterionReport;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QamError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("generator is not strictly monotone: f({x}) = {fx}, f({y}) = {fy}")]
    NotMonotone { x: f64, fx: f64, y: f64, fy: f64 },
    #[error("not differentiable: {0}")]
    NotDifferentiable(String),
    #[error("derivative vanishes at x = {0}")]
    ZeroDerivative(f64),
    #[error("difference quotients do not settle at x = {x}: {detail}")]
    Unstable { x: f64, detail: String },
    #[error("value {y} is outside the attainable range [{lo}, {hi}]")]
    Range { y: f64, lo: f64, hi: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("criteria disagree: {}", ConflictSummary(.0))]
    CriteriaConflict(Vec<CriterionReport>),
    #[error("no incomparability witness found: {0}")]
    NoWitnessFound(String),
    #[error("generators are not comparable in the required direction: {0}")]
    NotComparable(String),
}

pub type Result<T> = std::result::Result<T, QamError>;

struct ConflictSummary<'a>(&'a [CriterionReport]);

impl fmt::Display for ConflictSummary<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for r in self.0 {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            write!(f, "{:?}={:?}", r.criterion, r.verdict)?;
        }
        Ok(())
    }
}
