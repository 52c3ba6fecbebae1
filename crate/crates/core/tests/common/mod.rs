//! Strategies shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use liesym::jetspace::JetContext;
use liesym::liealg::bracket_vf;
use liesym::prolong::{prolong, VectorField};
use liesym::symexpr::{eval_numeric, parse, sym, Context, Expr, JetVar};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

type Outcome = Result<(), TestCaseError>;

pub const CASES: u32 = 1000;

pub fn config() -> ProptestConfig {
    ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() }
}

/// Variables `x, y`, parameters `a, k`, dependent `u(x, y)`.
pub fn context() -> Context {
    let mut c = Context::new();
    c.declare_param("a").declare_param("k");
    c.declare_var("x").declare_var("y");
    c.declare_dep("u", &["x", "y"]);
    c
}

pub fn jet_context() -> JetContext {
    JetContext::new(context(), 4).unwrap()
}

pub fn jet(index: &[&str]) -> Expr {
    Expr::jet(JetVar { dep: sym("u"), index: index.iter().map(|v| sym(v)).collect() })
}

fn constant() -> impl Strategy<Value = Expr> {
    prop_oneof![(-4i64..=4).prop_map(Expr::int), (-3i64..=3, 1i64..=4).prop_map(|(n, d)| Expr::frac(n, d))]
}

fn leaf(with_jets: bool) -> BoxedStrategy<Expr> {
    let base = prop_oneof![
        constant(),
        Just(Expr::var("x")),
        Just(Expr::var("y")),
        Just(Expr::param("a")),
        Just(Expr::param("k")),
    ];
    if with_jets {
        prop_oneof![4 => base, 1 => Just(jet(&[])), 1 => Just(jet(&["x"])), 1 => Just(jet(&["y"]))].boxed()
    } else {
        base.boxed()
    }
}

/// Small expressions built from sums, products, powers, reciprocals of
/// positive sums and the elementary functions.
pub fn expr(with_jets: bool) -> BoxedStrategy<Expr> {
    leaf(with_jets)
        .prop_recursive(3, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(p, q)| &p + &q),
                (inner.clone(), inner.clone()).prop_map(|(p, q)| &p - &q),
                (inner.clone(), inner.clone()).prop_map(|(p, q)| &p * &q),
                (inner.clone(), 2i64..=3).prop_map(|(p, n)| p.pow(n)),
                inner.clone().prop_map(|p| (&(&p * &p) + &Expr::one()).inv().unwrap()),
                inner.clone().prop_map(|p| Expr::sin(&p)),
                inner.clone().prop_map(|p| Expr::cos(&p)),
                inner.clone().prop_map(|p| Expr::exp(&p.scale(&liesym::symexpr::ratio(1, 4)))),
            ]
        })
        .boxed()
}

/// Point field on `(x, y, u)` with coefficients free of derivatives.
pub fn point_field(name: &'static str) -> impl Strategy<Value = VectorField> {
    let coeff = || {
        leaf(false)
            .prop_recursive(2, 8, 2, |inner| {
                prop_oneof![
                    (inner.clone(), inner.clone()).prop_map(|(p, q)| &p + &q),
                    (inner.clone(), inner.clone()).prop_map(|(p, q)| &p * &q),
                    inner.clone().prop_map(|p| Expr::sin(&p)),
                    inner.clone().prop_map(|p| &p * &jet(&[])),
                ]
            })
            .boxed()
    };
    (coeff(), coeff(), coeff())
        .prop_map(move |(a, b, c)| VectorField::new(&jet_context(), name, vec![a, b], c).unwrap())
}

fn point(x: f64, y: f64, a: f64, k: f64) -> BTreeMap<String, f64> {
    [("x", x), ("y", y), ("a", a), ("k", k)].into_iter().map(|(n, v)| (n.to_string(), v)).collect()
}

pub fn normalization_is_idempotent(e: &Expr) -> Outcome {
    let again = e.to_node().to_expr().unwrap();
    prop_assert_eq!(&again, e);
    prop_assert_eq!(again.to_node().to_expr().unwrap(), again);
    Ok(())
}

pub fn printing_round_trips(e: &Expr) -> Outcome {
    let back = parse(&e.to_string(), &context()).unwrap();
    prop_assert!((&back - e).is_zero(), "{} reparsed as {}", e, back);
    Ok(())
}

/// Central difference in `x` at a point of `[0.5, 1.5]^4`, relative error `≤ 1e-6`.
pub fn derivative_matches_finite_difference(e: &Expr, (x, y, a, k): (f64, f64, f64, f64)) -> Outcome {
    let d = e.diff_var("x");
    let h = 1e-5;
    let f = |x: f64| eval_numeric(e, &point(x, y, a, k)).unwrap();
    let fd = (f(x + h) - f(x - h)) / (2.0 * h);
    let exact = eval_numeric(&d, &point(x, y, a, k)).unwrap();
    let scale = 1.0 + exact.abs().max(f(x).abs());
    prop_assert!((fd - exact).abs() <= 1e-6 * scale, "d/dx {}: exact {} vs {}", e, exact, fd);
    Ok(())
}

pub fn unit_box() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (0.5f64..1.5, 0.5f64..1.5, 0.5f64..1.5, 0.5f64..1.5)
}

pub fn total_derivatives_commute(e: &Expr) -> Outcome {
    let jc = jet_context();
    let xy = jc.total_derivative(&jc.total_derivative(e, "x").unwrap(), "y").unwrap();
    let yx = jc.total_derivative(&jc.total_derivative(e, "y").unwrap(), "x").unwrap();
    prop_assert!((&xy - &yx).is_zero());
    Ok(())
}

pub fn prolongation_is_linear(v: &VectorField, w: &VectorField, c: i64) -> Outcome {
    let jc = jet_context();
    let c = Expr::int(c);
    let sum = prolong(&jc, &v.add(&w.scale(&c)), 2).unwrap();
    let pv = prolong(&jc, v, 2).unwrap();
    let pw = prolong(&jc, w, 2).unwrap();
    for (index, phi) in &sum.phi {
        let expected = &pv.phi[index] + &(&c * &pw.phi[index]);
        prop_assert!((phi - &expected).is_zero(), "phi^{:?}", index);
    }
    Ok(())
}

pub fn bracket_is_antisymmetric(v: &VectorField, w: &VectorField) -> Outcome {
    prop_assert!(bracket_vf(v, w).add(&bracket_vf(w, v)).is_zero());
    prop_assert!(bracket_vf(v, v).is_zero());
    Ok(())
}
