//! Bundled generators, pairs, triples and windows exercised by the
//! conformance report.

/// Identity below 1, `(1 + x^2) / 2` above: C^1 but not C^2 at the cut.
pub const PIECEWISE_H: &str = "piecewise(1; id; affine(0.5,0.5,pow(2)))";

/// Interval shared by the generator catalogue.
pub const CATALOGUE_DOMAIN: &str = "(0.5,2)";

pub const CATALOGUE: [&str; 10] = ["id", "pow(-1)", "pow(0.5)", "pow(2)", "pow(3)", "log", "exp(1)", "exp(-1)", "exp(2)", PIECEWISE_H];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair {
    pub f: &'static str,
    pub g: &'static str,
    pub domain: &'static str,
}

const EXTRA_PAIRS: [Pair; 9] = [
    Pair { f: "id", g: "pow(3)", domain: "(-1,1)" },
    Pair { f: "id", g: "exp(1)", domain: "(-1,1)" },
    Pair { f: "exp(-1)", g: "exp(1)", domain: "(-1,1)" },
    Pair { f: "pow(3)", g: "exp(1)", domain: "(-1,1)" },
    Pair { f: "id", g: PIECEWISE_H, domain: "(0,2)" },
    Pair { f: PIECEWISE_H, g: "pow(2)", domain: "(0,2)" },
    Pair { f: "id", g: "pow(2)", domain: "(0,2)" },
    Pair { f: "pow(1)", g: "pow(2)", domain: "(0,10)" },
    Pair { f: "id", g: "affine(2,1,id)", domain: "(0,10)" },
];

/// Every unordered catalogue pair followed by the extra pairs.
pub fn pairs() -> Vec<Pair> {
    let mut out = Vec::new();
    for (i, f) in CATALOGUE.iter().enumerate() {
        for g in &CATALOGUE[i + 1..] {
            out.push(Pair { f, g, domain: CATALOGUE_DOMAIN });
        }
    }
    out.extend(EXTRA_PAIRS);
    out
}

/// `(f, h, g)` with `A[f] <= A[h] <= A[g]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub f: &'static str,
    pub h: &'static str,
    pub g: &'static str,
    pub domain: &'static str,
}

pub const TRIPLES: [Triple; 6] = [
    Triple { f: "id", h: PIECEWISE_H, g: "pow(2)", domain: "(0,2)" },
    Triple { f: "pow(-1)", h: "log", g: "id", domain: "(0.5,2)" },
    Triple { f: "log", h: "pow(0.5)", g: "id", domain: "(0.5,2)" },
    Triple { f: "id", h: "pow(2)", g: "pow(3)", domain: "(0.5,2)" },
    Triple { f: "exp(-1)", h: "id", g: "exp(1)", domain: "(0.5,2)" },
    Triple { f: "pow(0.5)", h: PIECEWISE_H, g: "exp(2)", domain: "(0.5,2)" },
];

/// Pin pairs `(x0, x1)` inside `(0,2)`, on both sides of the cut of [`PIECEWISE_H`] and across it.
pub const PINS: [(f64, f64); 10] = [
    (0.1, 1.9),
    (0.25, 0.75),
    (0.5, 1.5),
    (0.9, 1.1),
    (1.2, 1.8),
    (0.05, 0.5),
    (0.3, 1.0),
    (1.0, 1.7),
    (0.6, 1.95),
    (1.4, 1.6),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowCase {
    pub gen: &'static str,
    pub domain: &'static str,
    pub x0: &'static str,
    pub u: &'static str,
}

const fn case(gen: &'static str, domain: &'static str, x0: &'static str, u: &'static str) -> WindowCase {
    WindowCase { gen, domain, x0, u }
}

pub const WINDOW_SUITE: [WindowCase; 20] = [
    case("pow(2)", "(0.5,2)", "1", "[0.4,2.1]"),
    case("exp(1)", "(0,1)", "0.3", "[1,1]"),
    case("log", "(0.5,2)", "1", "[0,2]"),
    case("log", "(0.5,2)", "1", "[-2.5,0]"),
    case("id", "(0,1)", "0.5", "[-1,1]"),
    case("id", "(0,1)", "0.5", "[0.5,1]"),
    case("exp(-1)", "(-1,1)", "0", "[-2,0]"),
    case("exp(2)", "(-1,1)", "0.2", "[1,3]"),
    case("exp(2)", "(-1,1)", "0.2", "[-1,1.5]"),
    case("pow(3)", "(0.5,2)", "1", "[0.9,4.1]"),
    case("pow(3)", "(0.5,2)", "1", "[1,2]"),
    case("pow(-1)", "(0.5,2)", "1", "[-4.5,-0.9]"),
    case("pow(0.5)", "(0.5,2)", "1", "[-1.1,0]"),
    case("pow(0.5)", "(0.5,2)", "1", "(-1.5,-0.2)"),
    case(PIECEWISE_H, "(0,2)", "0.5", "[0,1]"),
    case(PIECEWISE_H, "(0,2)", "1.5", "[-0.5,1]"),
    case(PIECEWISE_H, "(0,2)", "0.5", "[0.2,1]"),
    case("affine(3,-1,exp(0.5))", "(0,4)", "2", "[0,1]"),
    case("pow(2)", "(1,3)", "2", "[0.3,1]"),
    case("log", "(1,3)", "2", "[-1,-0.3]"),
];
