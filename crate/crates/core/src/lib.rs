//! Quasi-arithmetic means `f^{-1}(sum w_i f(a_i))`: evaluation, decision of
//! their pointwise order through several equivalent criteria, constructive
//! incomparability witnesses, and interval-type sets of means.

pub mod comparison;
pub mod conformance;
pub mod corpus;
pub mod error;
pub mod generator;
pub mod intervals;
pub mod means;
pub mod numeric;
pub mod settings;

pub use comparison::{
    affine_equivalence, compare, find_incomparability_witness, mikusinski_index, ComparisonVerdict,
    Criterion, CriterionReport, CriterionVerdict, Relation,
};
pub use error::{QamError, Result};
pub use generator::{parse_generator, Direction, Domain, Generator, GeneratorExpr, Side};
pub use means::{exponential_mean, power_mean, quasi_mean, WeightedSample};
pub use settings::{SamplingPlan, Settings, Tolerances};
