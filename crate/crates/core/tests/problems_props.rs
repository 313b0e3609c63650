//! Expression language and benchmark registry: printer/parser round trip,
//! a table of hand-checked evaluations, and the registered decompositions
//! against textbook closures.

use std::f64::consts::{E, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sppa_core::problems::{
    builtin, parse_expr, parse_problem, EvalError, Expr, Func, ProblemError,
};

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..1000, 0u32..4).prop_map(|(m, s)| Expr::Const(m as f64 / 10f64.powi(s as i32))),
        prop::sample::select(vec!["x", "y", "z1", "alpha"]).prop_map(|v| Expr::Var(v.to_string())),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        let b = |e: Expr| Box::new(e);
        prop_oneof![
            inner.clone().prop_map(move |a| Expr::Neg(b(a))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Add(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Sub(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Mul(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Div(b(a), b(c))),
            (inner.clone(), inner.clone()).prop_map(move |(a, c)| Expr::Pow(b(a), b(c))),
            (
                prop::sample::select(vec![Func::Sin, Func::Cos, Func::Exp, Func::Sqrt, Func::Abs]),
                inner
            )
                .prop_map(move |(f, a)| Expr::Call(f, b(a))),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 512, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn printed_expressions_reparse_identically(e in arb_expr()) {
        let text = e.to_string();
        let back = parse_expr(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
        prop_assert_eq!(back, e, "{}", text);
    }
}

#[test]
fn evaluation_fixtures() {
    let at = |x: f64, y: f64| {
        move |n: &str| match n {
            "x" => Some(x),
            "y" => Some(y),
            _ => None,
        }
    };
    let fixtures: [(&str, f64, f64, f64); 20] = [
        ("x^2 + y", 2.0, 1.0, 5.0),
        ("-x^2", 3.0, 0.0, -9.0),
        ("(-x)^2", 3.0, 0.0, 9.0),
        ("2^3^2", 0.0, 0.0, 512.0),
        ("x - y - 1", 5.0, 2.0, 2.0),
        ("x / y / 2", 12.0, 3.0, 2.0),
        ("2*x + 3*y", 1.5, -1.0, 0.0),
        ("sin(pi/6)", 0.0, 0.0, 0.5),
        ("cos(x)*cos(x) + sin(x)*sin(x)", 0.7, 0.0, 1.0),
        ("exp(1)", 0.0, 0.0, E),
        ("e", 0.0, 0.0, E),
        ("sqrt(x^2 + y^2)", 3.0, 4.0, 5.0),
        ("abs(x - y)", 1.0, 4.5, 3.5),
        ("2^-1", 0.0, 0.0, 0.5),
        ("x^0.5", 2.25, 0.0, 1.5),
        ("(1 - x)^2 + 100*(y - x^2)^2", 1.0, 1.0, 0.0),
        ("(1 - x)^2 + 100*(y - x^2)^2", 0.0, 0.0, 1.0),
        (
            "20 + x^2 + y^2 - 10*cos(2*pi*x) - 10*cos(2*pi*y)",
            1.0,
            0.0,
            1.0,
        ),
        ("-x - -y", 2.0, 7.0, 5.0),
        ("1e-3*x + 2.5E2", 1000.0, 0.0, 251.0),
    ];
    for (text, x, y, want) in fixtures {
        let got = parse_expr(text).unwrap().eval(&at(x, y)).unwrap();
        assert!(
            (got - want).abs() <= 1e-12 * want.abs().max(1.0),
            "{text}: {got} vs {want}"
        );
    }
}

#[test]
fn domain_errors_name_the_subexpression() {
    let env = |_: &str| Some(-1.0);
    match parse_expr("1 + sqrt(x)").unwrap().eval(&env) {
        Err(EvalError::Domain { expr, .. }) => assert_eq!(expr, "sqrt(x)"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        parse_expr("1/(x + 1)").unwrap().eval(&env),
        Err(EvalError::Domain { .. })
    ));
}

fn rosenbrock(x: f64, y: f64) -> f64 {
    (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
}
fn rastrigin(x: f64, y: f64) -> f64 {
    20.0 + x * x - 10.0 * (2.0 * PI * x).cos() + y * y - 10.0 * (2.0 * PI * y).cos()
}
fn ackley(x: f64, y: f64) -> f64 {
    -20.0 * (-0.2 * (0.5 * (x * x + y * y)).sqrt()).exp()
        - (0.5 * ((2.0 * PI * x).cos() + (2.0 * PI * y).cos())).exp()
        + E
        + 20.0
}
fn eggholder(x: f64, y: f64) -> f64 {
    -(y + 47.0) * (x / 2.0 + y + 47.0).abs().sqrt().sin() - x * (x - (y + 47.0)).abs().sqrt().sin()
}

#[test]
fn builtins_match_textbook_formulas_at_100_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let table: [(&str, fn(f64, f64) -> f64); 4] = [
        ("rosenbrock", rosenbrock),
        ("rastrigin", rastrigin),
        ("ackley", ackley),
        ("eggholder", eggholder),
    ];
    for (name, f) in table {
        let p = builtin(name).unwrap();
        let (lo, hi) = (p.variables[0].lo, p.variables[0].hi);
        for _ in 0..100 {
            let pt = [rng.gen_range(lo..=hi), rng.gen_range(lo..=hi)];
            // constant + linear part + every registered term
            let mut v = p.linear_objective.value(&pt);
            for t in &p.nonlinear_terms {
                let sppa_core::problems::TermTarget::Objective { coef } = t.target else {
                    panic!("{name}: objective term targets a row");
                };
                v += coef * t.eval(&pt).unwrap();
            }
            let want = f(pt[0], pt[1]);
            assert!(
                (v - want).abs() <= 1e-9 * want.abs().max(1.0),
                "{name} at {pt:?}: {v} vs {want}"
            );
        }
    }
}

#[test]
fn known_optima() {
    assert_eq!(
        builtin("rosenbrock")
            .unwrap()
            .objective_value(&[1.0, 1.0])
            .unwrap(),
        0.0
    );
    assert!(
        builtin("rastrigin")
            .unwrap()
            .objective_value(&[0.0, 0.0])
            .unwrap()
            .abs()
            < 1e-12
    );
    let egg = builtin("eggholder")
        .unwrap()
        .objective_value(&[512.0, 404.2319])
        .unwrap();
    assert!((egg + 959.6407).abs() <= 1e-3, "{egg}");
}

#[test]
fn rastrigin_splits_into_two_one_dimensional_terms() {
    let p = builtin("rastrigin").unwrap();
    let dims: Vec<usize> = p.nonlinear_terms.iter().map(|t| t.vars.len()).collect();
    assert_eq!(dims, vec![1, 1]);
    let p = builtin("rosenbrock").unwrap();
    assert_eq!(p.nonlinear_terms.len(), 1);
    assert_eq!(p.nonlinear_terms[0].vars.len(), 2);
}

#[test]
fn problem_file_errors_are_parse_errors() {
    let text = "objective = \"sin(x\"\n[[variables]]\nname = \"x\"\nlo = 0\nhi = 1\n";
    let err = parse_problem(text).unwrap_err();
    assert!(err.is_parse_error());
    assert!(err.to_string().contains("position 5"), "{err}");
    assert!(matches!(
        parse_problem("objective = 3"),
        Err(ProblemError::Syntax { .. })
    ));
}
