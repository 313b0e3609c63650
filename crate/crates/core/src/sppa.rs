//! The contraction loop: build the piecewise-linear surrogate on the current
//! box, solve it, shrink the box of every nonlinear variable about the
//! incumbent and repeat.
//!
//! Surrogates are encoded in normalized coordinates. Each nonlinear
//! variable `x_k` with current bounds `[lo_k, hi_k]` gets a companion
//! `u_k ∈ [0, 1]` tied by `x_k − w_k u_k = lo_k`, and the term grids live in
//! `u`-space. Vertex values are shifted by their minimum and the objective
//! is scaled to unit magnitude. This keeps the solver's absolute tolerances
//! meaningful when the box has shrunk by many orders of magnitude.

use std::cell::RefCell;
use std::time::Instant;

use log::{debug, info};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mc::{McEncoding, VertexValues};
use crate::milp::{
    solve_milp, ConstraintSense, LinearConstraint, LinearExpr, LpProblem, MilpStatus, ModelError,
    SolverConfig, VarId,
};
use crate::problems::{Benchmark, ProblemError, ProblemSpec, TermTarget};
use crate::pwl::{build_grid, build_integer_grid, Grid, Interval, PwlError};
use crate::Real;

/// Tolerance on constraint violation for an incumbent to count as feasible.
const FEAS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SppaConfig {
    /// Pieces per variable in the first iteration.
    pub initial_n_pieces: usize,
    /// Pieces per variable in later iterations.
    pub n_pieces: usize,
    /// Width ratio between consecutive boxes, in `(0, 1)`.
    pub contract_frac: f64,
    pub max_iters: usize,
    /// Stop once every box is narrower than this fraction of its first width.
    pub width_tol: f64,
    pub obj_stall_tol: f64,
    pub obj_stall_iters: usize,
    /// Wall-clock budget for the whole run, in seconds.
    pub time_budget: Option<f64>,
    pub milp: SolverConfig,
}

impl Default for SppaConfig {
    fn default() -> Self {
        SppaConfig {
            initial_n_pieces: 4,
            n_pieces: 4,
            contract_frac: 0.5,
            max_iters: 60,
            width_tol: 1e-8,
            obj_stall_tol: 1e-9,
            obj_stall_iters: 3,
            time_budget: None,
            milp: SolverConfig::default(),
        }
    }
}

impl SppaConfig {
    /// Defaults with a benchmark's piece counts and contraction factor.
    pub fn for_benchmark(b: &Benchmark) -> Self {
        SppaConfig {
            initial_n_pieces: b.initial_n_pieces,
            n_pieces: b.n_pieces,
            contract_frac: b.contract_frac,
            ..SppaConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), SppaError> {
        let bad = |m: &str| Err(SppaError::Config(m.to_string()));
        if self.initial_n_pieces == 0 || self.n_pieces == 0 {
            return bad("piece counts must be at least 1");
        }
        if !(self.contract_frac > 0.0 && self.contract_frac < 1.0) {
            return bad("contract_frac must lie in (0, 1)");
        }
        if self.max_iters == 0 || self.obj_stall_iters == 0 {
            return bad("iteration counts must be at least 1");
        }
        if [self.width_tol, self.obj_stall_tol]
            .iter()
            .any(|t| t.is_nan() || *t <= 0.0)
        {
            return bad("tolerances must be positive");
        }
        if self.time_budget.is_some_and(|t| t.is_nan() || t <= 0.0) {
            return bad("time budget must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Every contracted box reached the width tolerance.
    Width,
    /// The objective stopped changing.
    Stall,
    MaxIters,
    /// The surrogate had no feasible point.
    Infeasible,
    /// The run's time budget ran out.
    Budget,
    /// The MILP solver stopped without an incumbent for another reason.
    SolverFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Width => "width",
            Termination::Stall => "stall",
            Termination::MaxIters => "max_iters",
            Termination::Infeasible => "infeasible",
            Termination::Budget => "budget",
            Termination::SolverFailure => "solver_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpRecord {
    pub status: MilpStatus,
    pub nodes: usize,
    pub gap: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub pieces: usize,
    pub binaries: usize,
    pub incumbent: Vec<f64>,
    /// Exact objective at the incumbent.
    pub objective: f64,
    /// Objective of the piecewise-linear surrogate at the incumbent.
    pub surrogate: f64,
    pub violation: f64,
    /// Box of each contracted variable used in this iteration.
    pub bounds: Vec<Interval<f64>>,
    pub max_width: f64,
    pub milp: MilpRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SppaResult {
    /// Best incumbent, empty if no iteration produced one.
    pub best_point: Vec<f64>,
    pub best_objective: f64,
    pub best_iter: Option<usize>,
    pub best_feasible: bool,
    /// Variables whose boxes are contracted, in trace order.
    pub contracted: Vec<VarId>,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SppaError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("term `{term}` cannot be evaluated at vertex {vertex:?}: {reason}")]
    TermEvaluation {
        term: String,
        vertex: Vec<f64>,
        reason: String,
    },
    #[error(transparent)]
    Grid(#[from] PwlError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Shrinks `interval` to `frac` of its width, centered on `x` and slid back
/// inside `interval` when it sticks out. `x` is clamped into `interval`
/// first.
pub fn contract_bounds<T: Real>(interval: &Interval<T>, x: T, frac: T) -> Interval<T> {
    let x = interval.clamp(x);
    let width = frac * interval.width();
    let half = width / T::lit(2.0);
    let (lo, hi) = if x - half < interval.lo {
        (interval.lo, (interval.lo + width).min(interval.hi))
    } else if x + half > interval.hi {
        ((interval.hi - width).max(interval.lo), interval.hi)
    } else {
        (x - half, x + half)
    };
    Interval { lo, hi }
}

/// Contraction for an integer variable: the real contraction rounded
/// outward, never narrower than one unit while the box still spans one.
fn contract_integer(interval: &Interval<f64>, x: f64, frac: f64) -> Interval<f64> {
    let c = contract_bounds(interval, x, frac);
    let mut lo = c.lo.floor().max(interval.lo);
    let mut hi = c.hi.ceil().min(interval.hi);
    if hi - lo < 1.0 && interval.width() >= 1.0 {
        let x = x.round();
        if x + 1.0 <= interval.hi {
            lo = x;
            hi = x + 1.0;
        } else {
            lo = x - 1.0;
            hi = x;
        }
    }
    Interval { lo, hi }
}

fn is_degenerate(lo: f64, hi: f64) -> bool {
    hi - lo <= 8.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0)
}

/// Surrogate MILP for one iteration plus what is needed to read it back.
#[derive(Debug, Clone)]
pub struct IterationModel {
    pub lp: LpProblem,
    /// Model variable of each problem variable.
    pub var_map: Vec<VarId>,
    /// Normalized companion of each problem variable, if it has one.
    pub unit_map: Vec<Option<VarId>>,
    pub encodings: Vec<Option<McEncoding>>,
    pub binaries: usize,
    /// Model objective = `objective_scale` × surrogate objective.
    pub objective_scale: f64,
}

impl IterationModel {
    /// Problem-space point from a model solution. Nonlinear variables are
    /// read through their normalized companions.
    pub fn extract(
        &self,
        problem: &ProblemSpec,
        bounds: &[(f64, f64)],
        values: &[f64],
    ) -> Vec<f64> {
        problem
            .variables
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let (lo, hi) = bounds[j];
                let mut x = match self.unit_map[j] {
                    Some(u) => {
                        let t = values[u.0].clamp(0.0, 1.0);
                        if t == 1.0 {
                            hi
                        } else {
                            (lo + (hi - lo) * t).clamp(lo, hi)
                        }
                    }
                    None if is_degenerate(lo, hi) && lo.is_finite() => lo,
                    None => values[self.var_map[j].0],
                };
                if v.integer {
                    x = x.round().clamp(lo, hi);
                }
                x
            })
            .collect()
    }
}

/// Builds the surrogate on `bounds` (one `(lo, hi)` per problem variable)
/// with `pieces` pieces per nonlinear variable.
pub fn build_iteration_model(
    problem: &ProblemSpec,
    bounds: &[(f64, f64)],
    pieces: usize,
) -> Result<IterationModel, SppaError> {
    let mut lp = LpProblem::new(problem.sense);
    let var_map: Vec<VarId> = problem
        .variables
        .iter()
        .zip(bounds)
        .map(|(v, &(lo, hi))| lp.add_var(v.name.clone(), lo, hi, v.integer))
        .collect();
    let mut unit_map = vec![None; problem.variables.len()];
    for v in problem.nonlinear_vars() {
        let (lo, hi) = bounds[v.0];
        if is_degenerate(lo, hi) {
            continue;
        }
        let u = lp.add_var(
            format!("u_{}", problem.variables[v.0].name),
            0.0,
            1.0,
            false,
        );
        lp.add_row(
            LinearConstraint::new(
                vec![(var_map[v.0], 1.0), (u, -(hi - lo))],
                ConstraintSense::Eq,
                lo,
            )
            .named(format!("unit_{}", problem.variables[v.0].name)),
        );
        unit_map[v.0] = Some(u);
    }

    let mut objective = LinearExpr::new();
    for &(v, c) in &problem.linear_objective.terms {
        objective.add_term(var_map[v.0], c);
    }
    objective.constant = problem.linear_objective.constant;
    let mut rows: Vec<LinearConstraint> = problem
        .linear_constraints
        .iter()
        .map(|r| {
            let mut c = r.clone();
            c.coeffs = r.coeffs.iter().map(|&(v, a)| (var_map[v.0], a)).collect();
            c
        })
        .collect();

    let mut encodings = Vec::with_capacity(problem.nonlinear_terms.len());
    let mut binaries = 0;
    for (t, term) in problem.nonlinear_terms.iter().enumerate() {
        let active: Vec<usize> = (0..term.vars.len())
            .filter(|&i| unit_map[term.vars[i].0].is_some())
            .collect();
        let mut base: Vec<f64> = term.vars.iter().map(|v| bounds[v.0].0).collect();
        let (expr, shift, enc) = if active.is_empty() {
            let value = (term.func)(&base).map_err(|e| SppaError::TermEvaluation {
                term: term.label.clone(),
                vertex: base.clone(),
                reason: e.to_string(),
            })?;
            (LinearExpr::new(), value, None)
        } else {
            let mut breakpoints = Vec::with_capacity(active.len());
            for &i in &active {
                let v = term.vars[i];
                let (lo, hi) = bounds[v.0];
                let w = hi - lo;
                let b = if problem.variables[v.0].integer {
                    let iv = Interval::new(lo, hi)?;
                    let g = build_integer_grid(&[iv], &[pieces], &[true])?;
                    g.breakpoints(0)
                        .iter()
                        .map(|&x| ((x - lo) / w).clamp(0.0, 1.0))
                        .collect()
                } else {
                    build_grid(&[Interval::new(0.0, 1.0)?], &[pieces])?
                        .breakpoints(0)
                        .to_vec()
                };
                breakpoints.push(b);
            }
            let grid = Grid::from_breakpoints(breakpoints)?;
            let failure: RefCell<Option<String>> = RefCell::new(None);
            let values = VertexValues::compute(&grid, |u| {
                for (a, &i) in active.iter().enumerate() {
                    let (lo, hi) = bounds[term.vars[i].0];
                    base[i] = if u[a] == 1.0 {
                        hi
                    } else {
                        lo + (hi - lo) * u[a]
                    };
                }
                match (term.func)(&base) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e.to_string());
                        f64::NAN
                    }
                }
            });
            let mut values = match values {
                Ok(v) => v,
                Err(PwlError::NonFiniteValue { vertex }) => {
                    let mut point: Vec<f64> = term.vars.iter().map(|v| bounds[v.0].0).collect();
                    for (a, &i) in active.iter().enumerate() {
                        let (lo, hi) = bounds[term.vars[i].0];
                        point[i] = lo + (hi - lo) * vertex[a];
                    }
                    return Err(SppaError::TermEvaluation {
                        term: term.label.clone(),
                        vertex: point,
                        reason: failure
                            .into_inner()
                            .unwrap_or_else(|| "non-finite value".to_string()),
                    });
                }
                Err(e) => return Err(e.into()),
            };
            let shift = values
                .as_slice()
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            values.shift(shift);
            let z: Vec<VarId> = active
                .iter()
                .map(|&i| unit_map[term.vars[i].0].unwrap())
                .collect();
            let enc = McEncoding::build(&mut lp, &grid, &z, &values, &format!("t{t}_"))?;
            enc.install(&mut lp);
            binaries += enc.layout.mu_vars.len();
            (enc.objective_expr.clone(), shift, Some(enc))
        };
        match term.target {
            TermTarget::Objective { coef } => {
                objective.add_scaled(&expr, coef);
                objective.constant += coef * shift;
            }
            TermTarget::Constraint { row, coef } => {
                rows[row]
                    .coeffs
                    .extend(expr.terms.iter().map(|&(v, c)| (v, c * coef)));
                rows[row].rhs -= coef * (shift + expr.constant);
            }
        }
        encodings.push(enc);
    }
    for r in rows {
        lp.add_row(r);
    }

    objective.normalize();
    let max_coef = objective
        .terms
        .iter()
        .map(|t| t.1.abs())
        .fold(0.0, f64::max);
    let objective_scale = if max_coef > 0.0 { 1.0 / max_coef } else { 1.0 };
    lp.objective = LinearExpr {
        terms: objective
            .terms
            .iter()
            .map(|&(v, c)| (v, c * objective_scale))
            .collect(),
        constant: objective.constant * objective_scale,
    };
    Ok(IterationModel {
        lp,
        var_map,
        unit_map,
        encodings,
        binaries,
        objective_scale,
    })
}

/// Runs the contraction loop on `problem`.
///
/// Returns `Ok` with `termination == Infeasible` and an empty trace when the
/// first surrogate has no feasible point.
pub fn run(problem: &ProblemSpec, config: &SppaConfig) -> Result<SppaResult, SppaError> {
    problem.validate()?;
    config.validate()?;
    let start = Instant::now();
    let contracted = problem.nonlinear_vars();
    let mut bounds: Vec<(f64, f64)> = problem.variables.iter().map(|v| (v.lo, v.hi)).collect();
    let initial_width: Vec<f64> = contracted
        .iter()
        .map(|v| bounds[v.0].1 - bounds[v.0].0)
        .collect();

    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut best: Option<(usize, bool, f64)> = None;
    let mut stall = 0usize;
    let mut termination = Termination::MaxIters;

    for iter in 0..config.max_iters {
        let pieces = if iter == 0 {
            config.initial_n_pieces
        } else {
            config.n_pieces
        };
        let model = build_iteration_model(problem, &bounds, pieces)?;
        let mut milp_cfg = config.milp.clone();
        if let Some(budget) = config.time_budget {
            let left = (budget - start.elapsed().as_secs_f64()).max(0.0);
            milp_cfg.time_limit = Some(milp_cfg.time_limit.map_or(left, |t| t.min(left)));
        }
        let sol = solve_milp(&model.lp, &milp_cfg)?;
        debug!(
            "iter {iter}: {:?} after {} nodes, {} binaries",
            sol.status, sol.stats.nodes, model.binaries
        );
        if !sol.status.has_solution() {
            let out_of_time = config
                .time_budget
                .is_some_and(|b| start.elapsed().as_secs_f64() >= b);
            termination = match sol.status {
                MilpStatus::Infeasible => Termination::Infeasible,
                _ if out_of_time => Termination::Budget,
                _ => Termination::SolverFailure,
            };
            break;
        }

        let x = model.extract(problem, &bounds, &sol.values);
        let objective = problem.objective_value(&x).unwrap_or(f64::NAN);
        let violation = problem.constraint_violation(&x).unwrap_or(f64::INFINITY);
        let record_bounds: Vec<Interval<f64>> = contracted
            .iter()
            .map(|v| Interval {
                lo: bounds[v.0].0,
                hi: bounds[v.0].1,
            })
            .collect();
        let max_width = record_bounds.iter().map(|b| b.width()).fold(0.0, f64::max);
        trace.push(IterationRecord {
            iter,
            pieces,
            binaries: model.binaries,
            incumbent: x.clone(),
            objective,
            surrogate: sol.objective / model.objective_scale,
            violation,
            bounds: record_bounds,
            max_width,
            milp: MilpRecord {
                status: sol.status,
                nodes: sol.stats.nodes,
                gap: sol.gap,
                seconds: sol.stats.seconds,
            },
        });

        let feasible = violation <= FEAS_TOL;
        let improves = match best {
            None => !objective.is_nan(),
            Some((_, best_feasible, best_obj)) => {
                !objective.is_nan()
                    && ((feasible && !best_feasible)
                        || (feasible == best_feasible && problem.sense.better(objective, best_obj)))
            }
        };
        if improves {
            best = Some((iter, feasible, objective));
        }

        if iter > 0 {
            let prev = trace[iter - 1].objective;
            if (objective - prev).abs() <= config.obj_stall_tol {
                stall += 1;
            } else {
                stall = 0;
            }
        }

        let mut converged = true;
        for (c, v) in contracted.iter().enumerate() {
            let (lo, hi) = bounds[v.0];
            let iv = Interval { lo, hi };
            let next = if problem.variables[v.0].integer {
                contract_integer(&iv, x[v.0], config.contract_frac)
            } else {
                contract_bounds(&iv, x[v.0], config.contract_frac)
            };
            let w = next.width();
            let done = w <= config.width_tol * initial_width[c]
                || (problem.variables[v.0].integer && w <= 1.0);
            converged &= done;
            bounds[v.0] = (next.lo, next.hi);
        }
        info!("iter {iter}: objective {objective:.10e} at {x:?}, max width {max_width:.3e}");

        if converged {
            termination = Termination::Width;
            break;
        }
        if stall >= config.obj_stall_iters {
            termination = Termination::Stall;
            break;
        }
        if config
            .time_budget
            .is_some_and(|b| start.elapsed().as_secs_f64() >= b)
        {
            termination = Termination::Budget;
            break;
        }
    }

    let (best_point, best_objective, best_iter, best_feasible) = match best {
        Some((i, f, v)) => (trace[i].incumbent.clone(), v, Some(i), f),
        None => (Vec::new(), f64::NAN, None, false),
    };
    Ok(SppaResult {
        best_point,
        best_objective,
        best_iter,
        best_feasible,
        contracted,
        trace,
        termination,
    })
}
