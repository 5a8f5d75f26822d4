#![allow(dead_code)]
//! The expression corpus and the checks run on it.

use hermlab_core::calculus::fd_jet;
use hermlab_core::expr::{parse, Expr, ParseError};
use hermlab_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HAND: &[&str] = &[
    "z1",
    "-z1",
    "z1 + z2",
    "z1 - z2 - z3",
    "z1 - (z2 - z3)",
    "z1*z2/z3",
    "z1/(z2*z3)",
    "z1^2",
    "z1^(-2)",
    "-z1^2",
    "(-z1)^2",
    "z1^2^3",
    "2.5",
    "1e-3",
    "3i",
    "2.5e-1 + 3i",
    "(3+2i)*z1",
    "-i*z2",
    "exp(z1)",
    "exp(-abs2(z1))",
    "log(1 + z1*z2)",
    "sqrt(abs2(z1) + 1)",
    "re(z1) + im(z2)",
    "conj(z1)*z2",
    "abs2(z1 - 0.5i)",
    "exp(abs2(z1) + abs2(z2))",
    "z1^2 - conj(z2)/z1",
    "((z1))",
    "1/(1 - z1)^3",
    "exp(exp(z1))",
    "z1*z2 + (3+2i)",
    "- - z1",
    "z1 * -z2",
    "z1 / -2",
    "2*(z1 + z2)^2 - 3*z1*z2",
    "exp(z1)^3/log(z2)",
    "abs2(exp(z1 + i*z2))",
    "1 - abs2(z1)/4",
    "0.1*z1 + 0.2*z2 + 0.3*z3",
    "log(2 + abs2(z3))",
];

fn atom(rng: &mut ChaCha8Rng, n: usize, depth: u32, holo: bool) -> String {
    match rng.gen_range(0..if depth == 0 { 3 } else { 6 }) {
        0 => format!("z{}", rng.gen_range(1..=n)),
        1 => format!("{}", rng.gen_range(1..100) as f64 / 10.0),
        2 => format!("{}i", rng.gen_range(1..20) as f64 / 4.0),
        3 => format!("({})", expr(rng, n, depth - 1, holo)),
        4 => {
            let names: &[&str] = if holo { &["exp", "exp"] } else { &["exp", "abs2", "re", "im", "conj", "sqrt"] };
            format!("{}({})", names[rng.gen_range(0..names.len())], expr(rng, n, depth - 1, holo))
        }
        _ => format!("{}^{}", atom(rng, n, depth - 1, holo), rng.gen_range(1..4)),
    }
}

fn expr(rng: &mut ChaCha8Rng, n: usize, depth: u32, holo: bool) -> String {
    let mut s = atom(rng, n, depth, holo);
    for _ in 0..rng.gen_range(0..3) {
        let op = ["+", "-", "*", "/"][rng.gen_range(0..if holo { 3 } else { 4 })];
        s = format!("{s} {op} {}", atom(rng, n, depth, holo));
    }
    if rng.gen_bool(0.2) {
        s = format!("-{s}");
    }
    s
}

pub fn corpus() -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut out: Vec<String> = HAND.iter().map(|s| s.to_string()).collect();
    while out.len() < 100 {
        out.push(expr(&mut rng, 3, 3, false));
    }
    out
}

/// Round trip `parse(print(e)) == e` over the corpus; returns the case count.
pub fn check_round_trip() -> usize {
    let cases = corpus();
    assert_eq!(cases.len(), 100);
    for text in &cases {
        let e = parse(text, 3).unwrap_or_else(|err| panic!("{text}: {err}"));
        let printed = e.to_string();
        let again = parse(&printed, 3).unwrap_or_else(|err| panic!("{printed}: {err}"));
        assert_eq!(again.root(), e.root(), "{text} -> {printed}");
        assert_eq!(again.to_string(), printed);
        assert_eq!(again.is_holomorphic(), e.is_holomorphic());
    }
    cases.len()
}

pub fn check_precedence() {
    let z = [C64::new(2.0, 0.0), C64::new(0.0, 1.0)];
    let cases = [
        ("-z1^2", C64::new(-4.0, 0.0)),
        ("(-z1)^2", C64::new(4.0, 0.0)),
        ("z1 - z1 - z1", C64::new(-2.0, 0.0)),
        ("z1/z1*z1", C64::new(2.0, 0.0)),
        ("2*z1^2*3", C64::new(24.0, 0.0)),
        ("z1^2 - conj(z2)/z1", C64::new(4.0, 0.5)),
        ("z1 * -z2", C64::new(0.0, -2.0)),
    ];
    for (text, want) in cases {
        let got = parse(text, 2).unwrap().eval(&z).unwrap();
        assert!((got - want).norm() < 1e-14, "{text}: {got}");
    }
}

/// Byte offsets of parse errors; returns the case count.
pub fn check_error_offsets() -> usize {
    let cases: &[(&str, usize, usize)] = &[
        ("exp(", 1, 4),
        ("z1 +", 1, 4),
        ("z1 + * z2", 2, 5),
        ("(z1", 1, 3),
        ("z1)", 1, 2),
        ("z1 $ 2", 1, 3),
        ("z1^1.5", 1, 3),
        ("z1^z2", 2, 3),
        ("z3", 2, 0),
        ("z1 + z3", 2, 5),
        ("z0", 1, 0),
        ("foo(z1)", 1, 0),
        ("z1 + bar", 1, 5),
        ("exp z1", 1, 4),
        ("1e999", 1, 0),
        ("", 1, 0),
        ("abs2()", 1, 5),
        ("z1 z2", 2, 3),
    ];
    for &(text, n, offset) in cases {
        let err = parse(text, n).expect_err(text);
        assert_eq!(err.offset(), offset, "{text}: {err}");
    }
    assert!(matches!(parse("z3", 2), Err(ParseError::UnknownVariable { .. })));
    assert!(matches!(parse("foo(z1)", 1), Err(ParseError::UnknownIdentifier { .. })));
    assert!(matches!(parse("exp(", 1), Err(ParseError::Syntax { .. })));
    cases.len()
}

fn dbar_max(e: &Expr, z: &[C64], h: f64) -> f64 {
    let n = z.len();
    // ∂̄_j f = conj(∂_j conj f)
    let conj =
        fd_jet(z, &vec![h; 2 * n], |p| Ok(e.eval(p).map_err(|err| hermlab_core::Error::eval(p, err))?.conj())).unwrap();
    conj.d.iter().map(|d| d.norm()).fold(0.0, f64::max)
}

/// Holomorphic expressions have `∂̄f = O(h²)` numerically, the flagged
/// non-holomorphic ones do not. Returns the largest `|∂̄f| / ((1+|f|)h²)`.
pub fn check_holomorphic_flag() -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-3;
    let mut flagged = 0;
    let mut worst: f64 = 0.0;
    while flagged < 20 {
        let text = expr(&mut rng, 2, 2, true);
        let e = parse(&text, 2).unwrap();
        assert!(e.is_holomorphic(), "{text}");
        let z: Vec<C64> = (0..2).map(|_| C64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8))).collect();
        let Ok(v) = e.eval(&z) else { continue };
        if !(v.norm() < 1e3) {
            continue;
        }
        let scale = 1.0 + v.norm();
        let err = dbar_max(&e, &z, h);
        assert!(err <= 1e3 * scale * h * h, "{text} at {z:?}: |dbar| = {err:e}");
        worst = worst.max(err / (scale * h * h));
        flagged += 1;
    }
    for text in ["conj(z1)", "abs2(z1) + z2", "re(z1*z2)", "im(z2)", "sqrt(z1)"] {
        let e = parse(text, 2).unwrap();
        assert!(!e.is_holomorphic());
        if text != "sqrt(z1)" {
            assert!(dbar_max(&e, &[C64::new(0.3, -0.2), C64::new(0.1, 0.4)], h) > 0.1, "{text}");
        }
    }
    worst
}
