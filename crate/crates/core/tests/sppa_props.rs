//! Contraction-loop invariants on random one- and two-variable problems:
//! nested boxes, the width law, incumbent containment and untouched bounds
//! for variables outside nonlinear terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sppa_core::milp::{ConstraintSense, ObjectiveSense};
use sppa_core::problems::{parse_expr, ProblemSpec};
use sppa_core::sppa::{run, SppaConfig, Termination};

fn random_problem(rng: &mut ChaCha8Rng, case: usize) -> ProblemSpec {
    let sense = if case % 5 == 4 {
        ObjectiveSense::Maximize
    } else {
        ObjectiveSense::Minimize
    };
    let mut p = ProblemSpec::new(format!("random{case}"), sense);
    let lo = rng.gen_range(-4.0..1.0);
    p.add_variable("x", lo, lo + rng.gen_range(1.0..6.0), false);
    let two_d = case % 2 == 1;
    if two_d {
        let lo = rng.gen_range(-4.0..1.0);
        p.add_variable("y", lo, lo + rng.gen_range(1.0..6.0), false);
    }
    // a linear-only variable that must never be contracted
    p.add_variable("s", -10.0, 10.0, false);
    let (a, b, c) = (
        rng.gen_range(0.5..3.0),
        rng.gen_range(0.5..4.0),
        rng.gen_range(-2.0..2.0),
    );
    let text = if two_d {
        let k = rng.gen_range(-1.0..1.0);
        format!("{a}*sin({b}*x) + (x - {c})^2 + {k}*x*y + cos(y)*y + 0.1*s")
    } else {
        format!("{a}*sin({b}*x) + (x - {c})^2 + 0.1*s")
    };
    p.set_objective_expr(&parse_expr(&text).unwrap(), &[])
        .unwrap();
    // s is tied to x so the linear part has something to do
    p.add_constraint_expr(
        &parse_expr("s - x").unwrap(),
        ConstraintSense::Ge,
        -1.0,
        &[],
    )
    .unwrap();
    p
}

#[test]
fn nesting_width_law_and_containment_on_50_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..50 {
        let p = random_problem(&mut rng, case);
        let cfg = SppaConfig {
            initial_n_pieces: rng.gen_range(2..=6),
            n_pieces: rng.gen_range(2..=4),
            contract_frac: [0.3, 0.5, 0.7][case % 3],
            max_iters: 25,
            ..SppaConfig::default()
        };
        let r = run(&p, &cfg).unwrap();
        assert!(!r.trace.is_empty(), "case {case}");
        let s = p.var_by_name("s").unwrap();
        assert!(!r.contracted.contains(&s), "case {case}");

        for (t, rec) in r.trace.iter().enumerate() {
            assert_eq!(rec.iter, t);
            assert_eq!(rec.bounds.len(), r.contracted.len());
            // incumbent inside this iteration's box
            for (b, v) in rec.bounds.iter().zip(&r.contracted) {
                let x = rec.incumbent[v.0];
                assert!(
                    b.lo <= x && x <= b.hi,
                    "case {case} iter {t}: {x} not in {b:?}"
                );
            }
            let sv = rec.incumbent[s.0];
            assert!((-10.0..=10.0).contains(&sv));
            let Some(next) = r.trace.get(t + 1) else {
                continue;
            };
            for ((b, nb), v) in rec.bounds.iter().zip(&next.bounds).zip(&r.contracted) {
                assert!(
                    b.lo <= nb.lo && nb.hi <= b.hi,
                    "case {case} iter {t}: {nb:?} not in {b:?}"
                );
                let x = rec.incumbent[v.0];
                assert!(
                    nb.lo <= x && x <= nb.hi,
                    "case {case} iter {t}: {x} not in next {nb:?}"
                );
                let expect = cfg.contract_frac * b.width();
                let tol = 1e-12 * b.width().max(1.0);
                let clipped = nb.lo == b.lo || nb.hi == b.hi;
                if clipped {
                    assert!(nb.width() <= expect + tol, "case {case} iter {t}");
                } else {
                    assert!(
                        (nb.width() - expect).abs() <= tol,
                        "case {case} iter {t}: {} vs {expect}",
                        nb.width()
                    );
                }
            }
        }

        // the reported best is the best recorded true objective
        let best = r
            .trace
            .iter()
            .filter(|rec| rec.violation <= 1e-6)
            .map(|rec| rec.objective)
            .reduce(|a, b| if p.sense.better(b, a) { b } else { a })
            .unwrap();
        assert_eq!(r.best_objective, best, "case {case}");
        assert!(r.best_feasible);
        assert_eq!(r.best_point, r.trace[r.best_iter.unwrap()].incumbent);
        if r.termination == Termination::MaxIters {
            assert_eq!(r.trace.len(), cfg.max_iters);
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..5 {
        let p = random_problem(&mut rng, case);
        let cfg = SppaConfig {
            max_iters: 15,
            ..SppaConfig::default()
        };
        let strip = |mut r: sppa_core::SppaResult| {
            for rec in &mut r.trace {
                rec.milp.seconds = 0.0;
            }
            r
        };
        let a = strip(run(&p, &cfg).unwrap());
        let b = strip(run(&p, &cfg).unwrap());
        assert_eq!(a, b, "case {case}");
    }
}

#[test]
fn integer_variables_stay_integral_and_nested() {
    let mut p = ProblemSpec::new("int", ObjectiveSense::Minimize);
    p.add_variable("n", -20.0, 20.0, true);
    p.add_variable("x", -3.0, 3.0, false);
    p.set_objective_expr(&parse_expr("(n - 7.3)^2 + n*sin(x) + x^2").unwrap(), &[])
        .unwrap();
    let r = run(&p, &SppaConfig::default()).unwrap();
    for w in r.trace.windows(2) {
        let (b, nb) = (&w[0].bounds[0], &w[1].bounds[0]);
        assert!(b.lo <= nb.lo && nb.hi <= b.hi);
        assert_eq!(nb.lo.fract(), 0.0);
        assert_eq!(nb.hi.fract(), 0.0);
        assert!(nb.width() >= 1.0);
    }
    for rec in &r.trace {
        assert_eq!(rec.incumbent[0].fract(), 0.0);
    }
    // exhaustive check over n with x optimized on a fine grid
    let mut best = f64::INFINITY;
    for n in -20..=20 {
        for i in 0..=6000 {
            let x = -3.0 + i as f64 * 1e-3;
            best = best.min(p.objective_value(&[n as f64, x]).unwrap());
        }
    }
    assert!(
        r.best_objective <= best + 1e-4,
        "{} vs {best}",
        r.best_objective
    );
}
