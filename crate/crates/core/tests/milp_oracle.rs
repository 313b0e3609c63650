//! Branch-and-bound against exhaustive enumeration.
//!
//! Instances have a few bounded integer variables and at most one
//! continuous variable. For a fixed integer assignment the continuous
//! variable's feasible set is an interval, so the oracle enumerates the
//! integer points and optimizes the continuous one in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sppa_core::milp::{
    parse_lp, solve_milp, write_lp, ConstraintSense, LinearConstraint, LpProblem, MilpStatus,
    ObjectiveSense, SolverConfig, VarId,
};

struct Instance {
    p: LpProblem,
    n_int: usize,
    has_cont: bool,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let sense = if rng.gen_bool(0.5) {
        ObjectiveSense::Minimize
    } else {
        ObjectiveSense::Maximize
    };
    let mut p = LpProblem::new(sense);
    let n_int = rng.gen_range(1..=4);
    let has_cont = rng.gen_bool(0.6);
    for j in 0..n_int {
        let lo = rng.gen_range(-3..=1) as f64;
        let hi = lo + rng.gen_range(0..=4) as f64;
        p.add_var(format!("x{j}"), lo, hi, true);
    }
    if has_cont {
        let lo = rng.gen_range(-5.0..0.0);
        p.add_var("y", lo, lo + rng.gen_range(0.5..8.0), false);
    }
    let n = p.num_vars();
    for j in 0..n {
        let c = rng.gen_range(-5..=5) as f64 + if j == n_int { 0.5 } else { 0.0 };
        p.objective.add_term(VarId(j), c);
    }
    for _ in 0..rng.gen_range(1..=3) {
        let mut coeffs: Vec<(VarId, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.8) {
                let frac = if j == n_int { 0.25 } else { 0.0 };
                coeffs.push((VarId(j), rng.gen_range(-4..=4) as f64 + frac));
            }
        }
        let sense = match rng.gen_range(0..5) {
            0 => ConstraintSense::Eq,
            1 | 2 => ConstraintSense::Ge,
            _ => ConstraintSense::Le,
        };
        let rhs = rng.gen_range(-6..=6) as f64 + if rng.gen_bool(0.3) { 0.5 } else { 0.0 };
        p.add_row(LinearConstraint::new(coeffs, sense, rhs));
    }
    Instance { p, n_int, has_cont }
}

/// Optimal objective by enumeration, `None` when infeasible.
fn brute_force(inst: &Instance) -> Option<f64> {
    let p = &inst.p;
    let ranges: Vec<(i64, i64)> = (0..inst.n_int)
        .map(|j| (p.vars[j].lo as i64, p.vars[j].hi as i64))
        .collect();
    let mut best: Option<f64> = None;
    let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        let candidate = if inst.has_cont {
            let yv = &p.vars[inst.n_int];
            let (mut lo, mut hi) = (yv.lo, yv.hi);
            let mut ok = true;
            for r in &p.rows {
                let mut a = 0.0;
                let mut act = 0.0;
                for &(v, c) in &r.coeffs {
                    if v.0 == inst.n_int {
                        a += c;
                    } else {
                        act += c * xf[v.0];
                    }
                }
                let (rl, rh) = match r.sense {
                    ConstraintSense::Le => (f64::NEG_INFINITY, r.rhs),
                    ConstraintSense::Ge => (r.rhs, f64::INFINITY),
                    ConstraintSense::Eq => (r.rhs, r.rhs),
                };
                if a == 0.0 {
                    ok &= act >= rl - 1e-9 && act <= rh + 1e-9;
                } else {
                    let (a1, a2) = ((rl - act) / a, (rh - act) / a);
                    let (l, h) = if a > 0.0 { (a1, a2) } else { (a2, a1) };
                    lo = lo.max(l);
                    hi = hi.min(h);
                }
            }
            if ok && lo <= hi + 1e-9 {
                let cy = p
                    .objective
                    .terms
                    .iter()
                    .find(|t| t.0 .0 == inst.n_int)
                    .map_or(0.0, |t| t.1);
                let y = if (cy * p.sense.sign()) > 0.0 { lo } else { hi };
                let mut full = xf.clone();
                full.push(y.clamp(yv.lo, yv.hi));
                Some(p.objective_value(&full))
            } else {
                None
            }
        } else if p.max_violation(&xf) <= 1e-9 {
            Some(p.objective_value(&xf))
        } else {
            None
        };
        if let Some(v) = candidate {
            if best.map_or(true, |b| p.sense.better(v, b)) {
                best = Some(v);
            }
        }
        let mut k = 0;
        loop {
            if k == x.len() {
                return best;
            }
            if x[k] < ranges[k].1 {
                x[k] += 1;
                break;
            }
            x[k] = ranges[k].0;
            k += 1;
        }
    }
}

#[test]
fn agrees_with_enumeration_on_100_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let cfg = SolverConfig {
        record_trace: true,
        ..SolverConfig::default()
    };
    let (mut feasible, mut infeasible) = (0, 0);
    for case in 0..100 {
        let inst = random_instance(&mut rng);
        let sol = solve_milp(&inst.p, &cfg).unwrap();
        match brute_force(&inst) {
            None => {
                infeasible += 1;
                assert_eq!(sol.status, MilpStatus::Infeasible, "case {case}");
            }
            Some(best) => {
                feasible += 1;
                assert_eq!(sol.status, MilpStatus::Optimal, "case {case}");
                assert!(
                    (sol.objective - best).abs() <= 1e-6 * (1.0 + best.abs()),
                    "case {case}: {} vs {best}",
                    sol.objective
                );
                // the returned point is feasible, integral and attains the objective
                assert!(inst.p.max_violation(&sol.values) <= 1e-6, "case {case}");
                assert!(
                    inst.p.max_fractionality(&sol.values) <= cfg.int_tol,
                    "case {case}"
                );
                assert!(
                    (inst.p.objective_value(&sol.values) - sol.objective).abs()
                        <= 1e-6 * (1.0 + best.abs())
                );
                // dual bounds never cut off the optimum
                for ev in &sol.stats.trace {
                    let slack = 1e-6 * (1.0 + best.abs());
                    match inst.p.sense {
                        ObjectiveSense::Minimize => {
                            assert!(ev.bound <= best + slack, "case {case}: {ev:?}")
                        }
                        ObjectiveSense::Maximize => {
                            assert!(ev.bound >= best - slack, "case {case}: {ev:?}")
                        }
                    }
                }
            }
        }
    }
    // the generator must exercise both outcomes
    assert!(
        feasible >= 30 && infeasible >= 5,
        "{feasible} feasible, {infeasible} infeasible"
    );
}

#[test]
fn knapsack_matches_subset_enumeration() {
    let w = [
        23.0, 31.0, 29.0, 44.0, 53.0, 38.0, 63.0, 85.0, 89.0, 82.0, 17.0, 41.0,
    ];
    let v = [
        92.0, 57.0, 49.0, 68.0, 60.0, 43.0, 67.0, 84.0, 87.0, 72.0, 33.0, 51.0,
    ];
    let cap = 265.0;
    let mut best = 0.0f64;
    for mask in 0u32..(1 << 12) {
        let (mut tw, mut tv) = (0.0, 0.0);
        for i in 0..12 {
            if mask >> i & 1 == 1 {
                tw += w[i];
                tv += v[i];
            }
        }
        if tw <= cap {
            best = best.max(tv);
        }
    }
    let mut p = LpProblem::new(ObjectiveSense::Maximize);
    let x: Vec<VarId> = (0..12).map(|i| p.add_binary(format!("x{i}"))).collect();
    for i in 0..12 {
        p.objective.add_term(x[i], v[i]);
    }
    p.add_row(LinearConstraint::new(
        x.iter().zip(w).map(|(&xi, wi)| (xi, wi)).collect(),
        ConstraintSense::Le,
        cap,
    ));
    let sol = solve_milp(&p, &SolverConfig::default()).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal);
    assert!(
        (sol.objective - best).abs() < 1e-9,
        "{} vs {best}",
        sol.objective
    );
}

#[test]
fn repeated_solves_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let inst = random_instance(&mut rng);
        let a = solve_milp(&inst.p, &SolverConfig::default()).unwrap();
        let b = solve_milp(&inst.p, &SolverConfig::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.values, b.values);
        assert_eq!(a.stats.nodes, b.stats.nodes);
    }
}

#[test]
fn lp_text_round_trip_preserves_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..30 {
        let inst = random_instance(&mut rng);
        let text = write_lp(&inst.p);
        let back = parse_lp(&text).unwrap_or_else(|e| panic!("case {case}: {e}\n{text}"));
        let a = solve_milp(&inst.p, &SolverConfig::default()).unwrap();
        let b = solve_milp(&back, &SolverConfig::default()).unwrap();
        assert_eq!(a.status, b.status, "case {case}\n{text}");
        if a.status == MilpStatus::Optimal {
            assert!(
                (a.objective - b.objective).abs() <= 1e-9 * (1.0 + a.objective.abs()),
                "case {case}"
            );
        }
    }
}
