//! Bounded-variable primal simplex.
//!
//! Every row `a·x` gets a logical variable `s` with `a·x − s = 0` and the row
//! range as the bounds of `s`, so the all-logical basis is always available.
//! Phase 1 minimizes the sum of bound violations of basic variables and
//! hands over to phase 2 as soon as the basis is feasible. The ratio test is
//! Harris' two-pass rule; after a long run of degenerate pivots the solver
//! switches to Bland's rule until progress resumes.

use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};

use super::lu::{factorize, LuFactors};
use super::model::{merge_terms, LpProblem, ModelError};
use super::SolverConfig;

const NONE: usize = usize::MAX;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const BLAND_AFTER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural values; meaningful for `Optimal` and best effort otherwise.
    pub values: Vec<f64>,
    /// Objective in the problem's own sense, including its constant.
    pub objective: f64,
    pub iterations: usize,
}

/// Solves the continuous relaxation of `problem` (integrality is ignored).
pub fn solve_lp(problem: &LpProblem, config: &SolverConfig) -> Result<LpSolution, ModelError> {
    problem.validate()?;
    let sf = StandardForm::new(problem, config);
    let deadline = config
        .time_limit
        .map(|t| Instant::now() + std::time::Duration::from_secs_f64(t.max(0.0)));
    let mut s = Simplex::new(&sf, sf.lo.clone(), sf.hi.clone(), None, config);
    let status = s.solve(deadline);
    let values = s.structural_values();
    let status = sf.check_caps(status, &values);
    Ok(LpSolution {
        status,
        objective: problem.objective_value(&values),
        values,
        iterations: s.iterations,
    })
}

/// Column-wise `[A | −I]` with bounds and minimization costs.
pub(crate) struct StandardForm {
    pub n: usize,
    pub m: usize,
    start: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    cost: Vec<f64>,
    capped: Vec<bool>,
    big: f64,
}

impl StandardForm {
    pub fn new(p: &LpProblem, cfg: &SolverConfig) -> Self {
        let n = p.vars.len();
        let m = p.rows.len();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in p.rows.iter().enumerate() {
            for (v, c) in merge_terms(&row.coeffs) {
                cols[v.0].push((i, c));
            }
        }
        let mut start = vec![0];
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        for col in &cols {
            for &(r, c) in col {
                rows.push(r);
                vals.push(c);
            }
            start.push(rows.len());
        }
        for r in 0..m {
            rows.push(r);
            vals.push(-1.0);
            start.push(rows.len());
        }

        let big = cfg.big_bound;
        let mut lo = Vec::with_capacity(n + m);
        let mut hi = Vec::with_capacity(n + m);
        let mut capped = vec![false; n];
        for (j, v) in p.vars.iter().enumerate() {
            let (mut l, mut h) = (v.lo, v.hi);
            if !l.is_finite() {
                l = -big;
                capped[j] = true;
            }
            if !h.is_finite() {
                h = big;
                capped[j] = true;
            }
            if capped[j] {
                warn!(
                    "variable `{}` is unbounded; using ±{big:e} as its bounds",
                    v.name
                );
            }
            lo.push(l);
            hi.push(h);
        }
        for row in &p.rows {
            let (l, h) = row.range();
            lo.push(l);
            hi.push(h);
        }
        let mut cost = vec![0.0; n + m];
        let sign = p.sense.sign();
        for (v, c) in merge_terms(&p.objective.terms) {
            cost[v.0] = sign * c;
        }
        StandardForm {
            n,
            m,
            start,
            rows,
            vals,
            lo,
            hi,
            cost,
            capped,
            big,
        }
    }

    #[inline]
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.start[j], self.start[j + 1]);
        (&self.rows[a..b], &self.vals[a..b])
    }

    /// Turns an optimum that leans on a replacement bound into `Unbounded`.
    pub fn check_caps(&self, status: LpStatus, x: &[f64]) -> LpStatus {
        if status != LpStatus::Optimal {
            return status;
        }
        let hit = self
            .capped
            .iter()
            .zip(x)
            .any(|(&c, &v)| c && v.abs() >= self.big * (1.0 - 1e-9));
        if hit {
            LpStatus::Unbounded
        } else {
            status
        }
    }
}

/// Basic variables per slot plus the full primal point, for warm starts.
#[derive(Debug, Clone)]
pub(crate) struct Basis {
    pub basic: Vec<usize>,
    pub x: Vec<f64>,
}

pub(crate) struct Simplex<'a> {
    sf: &'a StandardForm,
    cfg: &'a SolverConfig,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    basic: Vec<usize>,
    slot_of: Vec<usize>,
    lu: Option<LuFactors>,
    pub iterations: usize,
}

fn clamp(v: f64, l: f64, h: f64) -> f64 {
    v.max(l).min(h)
}

impl<'a> Simplex<'a> {
    pub fn new(
        sf: &'a StandardForm,
        lo: Vec<f64>,
        hi: Vec<f64>,
        warm: Option<&Basis>,
        cfg: &'a SolverConfig,
    ) -> Self {
        let total = sf.n + sf.m;
        let (basic, mut x) = match warm {
            Some(b) if b.basic.len() == sf.m && b.x.len() == total => {
                (b.basic.clone(), b.x.clone())
            }
            _ => ((sf.n..total).collect(), vec![0.0; total]),
        };
        let mut slot_of = vec![NONE; total];
        for (s, &v) in basic.iter().enumerate() {
            slot_of[v] = s;
        }
        for j in 0..total {
            if slot_of[j] == NONE {
                x[j] = clamp(x[j], lo[j], hi[j]);
            }
        }
        Simplex {
            sf,
            cfg,
            lo,
            hi,
            x,
            basic,
            slot_of,
            lu: None,
            iterations: 0,
        }
    }

    pub fn basis(&self) -> Basis {
        Basis {
            basic: self.basic.clone(),
            x: self.x.clone(),
        }
    }

    pub fn structural_values(&self) -> Vec<f64> {
        self.x[..self.sf.n].to_vec()
    }

    /// Factorizes the current basis, swapping in logicals for dependent
    /// columns, and recomputes the basic values.
    fn refactor(&mut self) -> bool {
        let m = self.sf.m;
        let mut repaired = false;
        loop {
            let sf = self.sf;
            let basic = &self.basic;
            match factorize(m, |s| sf.column(basic[s])) {
                Ok(f) => {
                    self.lu = Some(f);
                    break;
                }
                Err(sing) => {
                    if repaired {
                        return false;
                    }
                    repaired = true;
                    for (&slot, &row) in sing.slots.iter().zip(&sing.rows) {
                        let v = self.basic[slot];
                        self.slot_of[v] = NONE;
                        self.x[v] = clamp(self.x[v], self.lo[v], self.hi[v]);
                        let l = self.sf.n + row;
                        self.basic[slot] = l;
                        self.slot_of[l] = slot;
                    }
                }
            }
        }
        self.compute_basic_values();
        true
    }

    fn compute_basic_values(&mut self) {
        let m = self.sf.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.sf.n + m {
            if self.slot_of[j] == NONE && self.x[j] != 0.0 {
                let (rows, vals) = self.sf.column(j);
                for (&r, &v) in rows.iter().zip(vals) {
                    rhs[r] -= v * self.x[j];
                }
            }
        }
        let mut xb = vec![0.0; m];
        self.lu.as_ref().unwrap().ftran(&mut rhs, &mut xb);
        for (s, &v) in self.basic.iter().enumerate() {
            self.x[v] = xb[s];
        }
    }

    pub fn solve(&mut self, deadline: Option<Instant>) -> LpStatus {
        let m = self.sf.m;
        let total = self.sf.n + m;
        if !self.refactor() {
            return LpStatus::NumericalFailure;
        }
        let ftol = self.cfg.feas_tol;
        let otol = self.cfg.opt_tol;
        let max_iter = 50 * total + 1000;
        let mut cb = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut degenerate = 0usize;
        let mut verified = false;

        loop {
            if self.iterations >= max_iter {
                return LpStatus::IterationLimit;
            }
            if self.iterations.is_multiple_of(32) {
                if let Some(d) = deadline {
                    if Instant::now() >= d {
                        return LpStatus::TimeLimit;
                    }
                }
            }
            if self.lu.as_ref().unwrap().eta_count() >= REFACTOR_EVERY && !self.refactor() {
                return LpStatus::NumericalFailure;
            }
            let bland = degenerate > BLAND_AFTER;

            let mut phase1 = false;
            for (s, &v) in self.basic.iter().enumerate() {
                cb[s] = if self.x[v] < self.lo[v] - ftol {
                    phase1 = true;
                    -1.0
                } else if self.x[v] > self.hi[v] + ftol {
                    phase1 = true;
                    1.0
                } else {
                    0.0
                };
            }
            if !phase1 {
                for (s, &v) in self.basic.iter().enumerate() {
                    cb[s] = self.sf.cost[v];
                }
            }
            self.lu.as_ref().unwrap().btran(&mut cb, &mut y);

            // pricing
            let mut enter = NONE;
            let mut enter_dir = 0.0;
            let mut best_score = 0.0;
            for j in 0..total {
                if self.slot_of[j] != NONE || self.lo[j] == self.hi[j] {
                    continue;
                }
                let (rows, vals) = self.sf.column(j);
                let ya: f64 = rows.iter().zip(vals).map(|(&r, &v)| y[r] * v).sum();
                let d = if phase1 { 0.0 } else { self.sf.cost[j] } - ya;
                let dir = if d < -otol && self.x[j] < self.hi[j] {
                    1.0
                } else if d > otol && self.x[j] > self.lo[j] {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    enter = j;
                    enter_dir = dir;
                    break;
                }
                if d.abs() > best_score {
                    best_score = d.abs();
                    enter = j;
                    enter_dir = dir;
                }
            }

            if enter == NONE {
                if self.lu.as_ref().unwrap().eta_count() > 0 && !verified {
                    // confirm with fresh factors and basic values
                    if !self.refactor() {
                        return LpStatus::NumericalFailure;
                    }
                    verified = true;
                    continue;
                }
                return if phase1 {
                    LpStatus::Infeasible
                } else {
                    LpStatus::Optimal
                };
            }
            verified = false;

            let q = enter;
            let dir = enter_dir;
            rhs.iter_mut().for_each(|v| *v = 0.0);
            let (rows, vals) = self.sf.column(q);
            for (&r, &v) in rows.iter().zip(vals) {
                rhs[r] = v;
            }
            self.lu.as_ref().unwrap().ftran(&mut rhs, &mut alpha);

            // ratio test
            let block = |s: usize, x: &[f64], lo: &[f64], hi: &[f64]| -> Option<(f64, f64, f64)> {
                let a = alpha[s];
                if a.abs() <= PIVOT_TOL {
                    return None;
                }
                let rate = -dir * a;
                let v = self.basic[s];
                let (xv, l, u) = (x[v], lo[v], hi[v]);
                let (dist, target) = if rate < 0.0 {
                    if xv > u + ftol {
                        (xv - u, u)
                    } else if xv < l - ftol || l == f64::NEG_INFINITY {
                        return None;
                    } else {
                        (xv - l, l)
                    }
                } else if xv < l - ftol {
                    (l - xv, l)
                } else if xv > u + ftol || u == f64::INFINITY {
                    return None;
                } else {
                    (u - xv, u)
                };
                Some((dist, rate.abs(), target))
            };

            let own = if dir > 0.0 {
                self.hi[q] - self.x[q]
            } else {
                self.x[q] - self.lo[q]
            };
            let mut leave = NONE;
            let mut leave_t = f64::INFINITY;
            let mut leave_target = 0.0;
            if bland {
                for s in 0..m {
                    if let Some((dist, r, target)) = block(s, &self.x, &self.lo, &self.hi) {
                        let t = (dist / r).max(0.0);
                        if t < leave_t || (t == leave_t && self.basic[s] < self.basic[leave]) {
                            leave = s;
                            leave_t = t;
                            leave_target = target;
                        }
                    }
                }
            } else {
                let mut theta_max = f64::INFINITY;
                for s in 0..m {
                    if let Some((dist, r, _)) = block(s, &self.x, &self.lo, &self.hi) {
                        theta_max = theta_max.min((dist + ftol) / r);
                    }
                }
                let mut best_alpha = 0.0;
                for s in 0..m {
                    if let Some((dist, r, target)) = block(s, &self.x, &self.lo, &self.hi) {
                        let t = dist / r;
                        if t <= theta_max && alpha[s].abs() > best_alpha {
                            best_alpha = alpha[s].abs();
                            leave = s;
                            leave_t = t.max(0.0);
                            leave_target = target;
                        }
                    }
                }
            }

            let flip = own <= leave_t;
            if leave == NONE && !own.is_finite() {
                return if phase1 {
                    LpStatus::NumericalFailure
                } else {
                    LpStatus::Unbounded
                };
            }
            let theta = if flip { own } else { leave_t };
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            if theta != 0.0 {
                self.x[q] += dir * theta;
                for s in 0..m {
                    if alpha[s] != 0.0 {
                        self.x[self.basic[s]] -= dir * alpha[s] * theta;
                    }
                }
            }
            if flip {
                self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
            } else {
                let lv = self.basic[leave];
                self.x[lv] = leave_target;
                self.basic[leave] = q;
                self.slot_of[q] = leave;
                self.slot_of[lv] = NONE;
                self.lu.as_mut().unwrap().push_eta(&alpha, leave);
            }
            self.iterations += 1;
        }
    }
}
