#![allow(dead_code)]

use proptest::prelude::*;
use qam_core::{Domain, Generator, GeneratorExpr, Settings};

pub const PIECEWISE_H: &str = "piecewise(1; id; affine(0.5,0.5,pow(2)))";

pub fn domain(text: &str) -> Domain {
    text.parse().unwrap()
}

pub fn gen(text: &str, d: &str) -> Generator {
    qam_core::parse_generator(text, domain(d)).unwrap()
}

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi).prop_filter("nonzero", |v: &f64| v.abs() > 0.05)
}

/// Smooth leaves usable on positive domains.
pub fn leaf() -> impl Strategy<Value = GeneratorExpr> {
    prop_oneof![
        Just(GeneratorExpr::Identity),
        Just(GeneratorExpr::Log),
        nonzero(-3.0, 3.0).prop_map(GeneratorExpr::Power),
        nonzero(-2.0, 2.0).prop_map(GeneratorExpr::Exp),
    ]
}

/// Leaves wrapped in affine maps and negations.
pub fn smooth_expr() -> impl Strategy<Value = GeneratorExpr> {
    leaf().prop_recursive(3, 8, 1, |inner| {
        prop_oneof![
            (nonzero(-4.0, 4.0), -5.0..5.0f64, inner.clone()).prop_map(|(a, b, e)| GeneratorExpr::affine(a, b, e)),
            inner.prop_map(GeneratorExpr::negate),
        ]
    })
}

/// Any expression, including piecewise joins inside (0.5, 2).
pub fn any_expr() -> impl Strategy<Value = GeneratorExpr> {
    prop_oneof![
        3 => smooth_expr(),
        1 => (0.7..1.8f64, smooth_expr(), smooth_expr()).prop_map(|(c, l, r)| GeneratorExpr::piecewise(c, l, r)),
    ]
}

/// A valid generator on (0.5, 2).
pub fn generator() -> impl Strategy<Value = Generator> {
    any_expr().prop_filter_map("valid generator", |e| Generator::new(e, domain("(0.5,2)")).ok())
}

pub fn smooth_generator() -> impl Strategy<Value = Generator> {
    smooth_expr().prop_filter_map("valid generator", |e| Generator::new(e, domain("(0.5,2)")).ok())
}

/// Points and unnormalized weights of a sample inside (0.5, 2).
pub fn sample_parts() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..7).prop_flat_map(|n| (prop::collection::vec(0.5..2.0f64, n), prop::collection::vec(0.1..1.0f64, n)))
}

pub fn sample(points: Vec<f64>, raw: Vec<f64>) -> qam_core::WeightedSample {
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    qam_core::WeightedSample::new(points, weights).unwrap()
}

pub fn settings() -> Settings {
    Settings::default()
}
