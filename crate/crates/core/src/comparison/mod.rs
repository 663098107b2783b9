//! The pointwise order between quasi-arithmetic means.
//!
//! `A[f] <= A[g]` is decided by running several equivalent criteria and
//! requiring them to agree. Equality is decided only by an exact affine fit
//! `g = alpha f + beta`; incomparability only with two concrete samples that
//! violate each direction.

mod affine;
mod criteria;
mod witness;

use serde::Serialize;

pub use affine::{affine_equivalence, AffineFit};
pub use criteria::{
    composition_convexity_test, derivative_ratio_test, mikusinski_index, mikusinski_test,
    pales_ratio_test, sampled_means_test, weighted_two_point_test,
};
pub use witness::find_incomparability_witness;

use crate::error::{QamError, Result};
use crate::generator::Generator;
use crate::means::{quasi_mean, WeightedSample};
use crate::settings::{Settings, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Criterion {
    CompositionConvexity,
    PalesRatio,
    DerivativeRatio,
    MikusinskiIndex,
    SampledMeans,
    WeightedTwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CriterionVerdict {
    SupportsLE,
    SupportsGE,
    SupportsEqual,
    Refutes,
    NotApplicable,
}

/// Which inequality a probe speaks against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Claim {
    /// `A[f] <= A[g]`
    LE,
    /// `A[f] >= A[g]`
    GE,
}

/// One evaluated probe: where it was taken, what was computed, and by how
/// much (relative to the criterion's scale) it violates `against`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Probe {
    pub against: Claim,
    pub inputs: Vec<f64>,
    pub values: Vec<f64>,
    pub violation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample: Option<WeightedSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub criterion: Criterion,
    pub verdict: CriterionVerdict,
    pub probes: usize,
    pub skipped: usize,
    /// Largest relative violation of `A[f] <= A[g]` seen.
    pub max_le_violation: Option<f64>,
    /// Largest relative violation of `A[f] >= A[g]` seen.
    pub max_ge_violation: Option<f64>,
    /// Worst probe against each claim.
    pub evidence: Vec<Probe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CriterionReport {
    pub(crate) fn not_applicable(criterion: Criterion, why: impl Into<String>) -> Self {
        CriterionReport {
            criterion,
            verdict: CriterionVerdict::NotApplicable,
            probes: 0,
            skipped: 0,
            max_le_violation: None,
            max_ge_violation: None,
            evidence: Vec::new(),
            note: Some(why.into()),
        }
    }

    pub fn is_applicable(&self) -> bool {
        self.verdict != CriterionVerdict::NotApplicable
    }

    /// The worst probe against `claim`, if it exceeds the refutation threshold.
    pub fn refuting_probe(&self, claim: Claim, tol: &Tolerances) -> Option<&Probe> {
        self.evidence
            .iter()
            .find(|p| p.against == claim && p.violation > tol.refute_threshold())
    }
}

/// Running maxima of the violations of both claims.
pub(crate) struct Tally {
    criterion: Criterion,
    le: Option<Probe>,
    ge: Option<Probe>,
    probes: usize,
    skipped: usize,
}

impl Tally {
    pub(crate) fn new(criterion: Criterion) -> Self {
        Tally {
            criterion,
            le: None,
            ge: None,
            probes: 0,
            skipped: 0,
        }
    }

    pub(crate) fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Records a probe whose violations of LE and GE are given; the probe is
    /// only built when it becomes the worst one so far.
    pub(crate) fn observe<F>(&mut self, le_violation: f64, ge_violation: f64, probe: F)
    where
        F: Fn(Claim, f64) -> Probe,
    {
        self.probes += 1;
        if self.le.as_ref().map_or(true, |p| le_violation > p.violation) {
            self.le = Some(probe(Claim::LE, le_violation));
        }
        if self.ge.as_ref().map_or(true, |p| ge_violation > p.violation) {
            self.ge = Some(probe(Claim::GE, ge_violation));
        }
    }

    pub(crate) fn finish(self, tol: &Tolerances) -> CriterionReport {
        let thr = tol.refute_threshold();
        let v_le = self.le.as_ref().map(|p| p.violation);
        let v_ge = self.ge.as_ref().map(|p| p.violation);
        if self.probes == 0 {
            return CriterionReport::not_applicable(self.criterion, "every probe was degenerate");
        }
        let holds_le = v_le.map_or(true, |v| v <= thr);
        let holds_ge = v_ge.map_or(true, |v| v <= thr);
        let verdict = match (holds_le, holds_ge) {
            (true, true) => CriterionVerdict::SupportsEqual,
            (true, false) => CriterionVerdict::SupportsLE,
            (false, true) => CriterionVerdict::SupportsGE,
            (false, false) => CriterionVerdict::Refutes,
        };
        CriterionReport {
            criterion: self.criterion,
            verdict,
            probes: self.probes,
            skipped: self.skipped,
            max_le_violation: v_le,
            max_ge_violation: v_ge,
            evidence: self.le.into_iter().chain(self.ge).collect(),
            note: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    /// `A[f] <= A[g]` and the means differ.
    Less,
    Greater,
    Equal,
    Incomparable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonVerdict {
    pub f: String,
    pub g: String,
    pub domain: String,
    pub relation: Relation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affine: Option<AffineFit>,
    pub reports: Vec<CriterionReport>,
    /// A sample with `A[f] > A[g]`.
    pub witness_le_violated: Option<WeightedSample>,
    /// A sample with `A[f] < A[g]`.
    pub witness_ge_violated: Option<WeightedSample>,
    pub tolerances: Tolerances,
    pub seed: u64,
}

pub(crate) fn require_common_domain(f: &Generator, g: &Generator) -> Result<()> {
    if f.domain() != g.domain() {
        return Err(QamError::Domain(format!(
            "means on different intervals are not compared: {} vs {}",
            f.domain(),
            g.domain()
        )));
    }
    Ok(())
}

/// Signed mean gap `A[f](s) - A[g](s)` relative to the domain width.
pub(crate) fn relative_gap(f: &Generator, g: &Generator, s: &WeightedSample) -> Result<f64> {
    let width = f.domain().sample_width();
    Ok((quasi_mean(f, s)? - quasi_mean(g, s)?) / width)
}

/// Decides the order between `A[f]` and `A[g]`.
pub fn compare(f: &Generator, g: &Generator, settings: &Settings) -> Result<ComparisonVerdict> {
    require_common_domain(f, g)?;
    let tol = settings.tol;
    let mut verdict = ComparisonVerdict {
        f: f.expr().to_string(),
        g: g.expr().to_string(),
        domain: f.domain().to_string(),
        relation: Relation::Equal,
        affine: None,
        reports: Vec::new(),
        witness_le_violated: None,
        witness_ge_violated: None,
        tolerances: tol,
        seed: settings.seed,
    };
    if let Some(fit) = affine_equivalence(f, g, settings) {
        verdict.affine = Some(fit);
        return Ok(verdict);
    }

    let (cf, cg) = (f.canonicalize(), g.canonicalize());
    let reports = vec![
        composition_convexity_test(&cf, &cg, settings)?,
        pales_ratio_test(&cf, &cg, settings)?,
        derivative_ratio_test(&cf, &cg, settings)?,
        mikusinski_test(&cf, &cg, settings)?,
        sampled_means_test(&cf, &cg, settings)?,
        weighted_two_point_test(&cf, &cg, settings)?,
    ];

    use CriterionVerdict::*;
    let applicable: Vec<CriterionVerdict> = reports.iter().filter(|r| r.is_applicable()).map(|r| r.verdict).collect();
    let all_le = applicable.iter().all(|v| matches!(v, SupportsLE | SupportsEqual));
    let all_ge = applicable.iter().all(|v| matches!(v, SupportsGE | SupportsEqual));
    let any_le = applicable.contains(&SupportsLE);
    let any_ge = applicable.contains(&SupportsGE);
    let all_refute = !applicable.is_empty() && applicable.iter().all(|v| *v == Refutes);

    let witness = |claim| {
        reports
            .iter()
            .filter(|r| matches!(r.criterion, Criterion::SampledMeans | Criterion::WeightedTwoPoint))
            .filter_map(|r| r.refuting_probe(claim, &tol))
            .filter(|p| p.sample.is_some())
            .max_by(|a, b| a.violation.total_cmp(&b.violation))
            .and_then(|p| p.sample.clone())
    };

    let relation = if all_le && any_le {
        Relation::Less
    } else if all_ge && any_ge {
        Relation::Greater
    } else if all_refute {
        let (wl, wg) = (witness(Claim::LE), witness(Claim::GE));
        match (wl, wg) {
            (Some(wl), Some(wg)) => {
                // Re-evaluate from scratch before claiming incomparability.
                let thr = tol.compare;
                if relative_gap(f, g, &wl)? > thr && relative_gap(f, g, &wg)? < -thr {
                    verdict.witness_le_violated = Some(wl);
                    verdict.witness_ge_violated = Some(wg);
                    Relation::Incomparable
                } else {
                    return Err(QamError::CriteriaConflict(reports));
                }
            }
            _ => return Err(QamError::CriteriaConflict(reports)),
        }
    } else {
        return Err(QamError::CriteriaConflict(reports));
    };
    verdict.relation = relation;
    verdict.reports = reports;
    Ok(verdict)
}
