use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::expr::{EvalError, Expr};
use super::ProblemError;
use crate::milp::{ConstraintSense, LinearConstraint, LinearExpr, ObjectiveSense, VarId};

/// Decision variable with possibly infinite bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub integer: bool,
}

/// Evaluator of a nonlinear term at the term's own variables, in order.
pub type TermFn = Arc<dyn Fn(&[f64]) -> Result<f64, EvalError> + Send + Sync>;

/// Where a nonlinear term's value goes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TermTarget {
    /// Adds `coef · value` to the objective.
    Objective { coef: f64 },
    /// Adds `coef · value` to the left-hand side of a constraint row.
    Constraint { row: usize, coef: f64 },
}

#[derive(Clone)]
pub struct NonlinearTerm {
    pub vars: Vec<VarId>,
    pub func: TermFn,
    pub target: TermTarget,
    /// Printable form of the term.
    pub label: String,
}

impl fmt::Debug for NonlinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearTerm")
            .field("vars", &self.vars)
            .field("target", &self.target)
            .field("label", &self.label)
            .finish()
    }
}

impl NonlinearTerm {
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        let local: Vec<f64> = self.vars.iter().map(|v| x[v.0]).collect();
        (self.func)(&local)
    }
}

/// A bounded optimization problem: linear objective and rows plus
/// nonlinear terms that add to either.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub sense: ObjectiveSense,
    pub variables: Vec<Variable>,
    pub linear_objective: LinearExpr,
    /// Rows; nonlinear terms may add to their left-hand sides.
    pub linear_constraints: Vec<LinearConstraint>,
    pub nonlinear_terms: Vec<NonlinearTerm>,
}

impl ProblemSpec {
    pub fn new(name: impl Into<String>, sense: ObjectiveSense) -> Self {
        ProblemSpec {
            name: name.into(),
            sense,
            variables: Vec::new(),
            linear_objective: LinearExpr::new(),
            linear_constraints: Vec::new(),
            nonlinear_terms: Vec::new(),
        }
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lo: f64,
        hi: f64,
        integer: bool,
    ) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            lo,
            hi,
            integer,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn var_names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .map(VarId)
    }

    /// Variables that appear in at least one nonlinear term, ascending.
    pub fn nonlinear_vars(&self) -> Vec<VarId> {
        let mut v: Vec<VarId> = self
            .nonlinear_terms
            .iter()
            .flat_map(|t| t.vars.iter().copied())
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let n = self.variables.len();
        for (i, v) in self.variables.iter().enumerate() {
            if self.variables[..i].iter().any(|w| w.name == v.name) {
                return Err(ProblemError::DuplicateVariable(v.name.clone()));
            }
            if v.lo.is_nan() || v.hi.is_nan() || v.lo > v.hi {
                return Err(ProblemError::InvalidBounds {
                    name: v.name.clone(),
                    lo: v.lo,
                    hi: v.hi,
                });
            }
        }
        let check = |var: VarId| {
            if var.0 >= n {
                Err(ProblemError::UnknownVariable(var.to_string()))
            } else {
                Ok(())
            }
        };
        for &(v, _) in &self.linear_objective.terms {
            check(v)?;
        }
        for r in &self.linear_constraints {
            for &(v, _) in &r.coeffs {
                check(v)?;
            }
        }
        for t in &self.nonlinear_terms {
            for &v in &t.vars {
                check(v)?;
                let var = &self.variables[v.0];
                if !(var.lo.is_finite() && var.hi.is_finite()) {
                    return Err(ProblemError::UnboundedNonlinearVariable(var.name.clone()));
                }
            }
            if let TermTarget::Constraint { row, .. } = t.target {
                if row >= self.linear_constraints.len() {
                    return Err(ProblemError::UnknownRow(row));
                }
            }
        }
        Ok(())
    }

    /// Exact objective at `x`.
    pub fn objective_value(&self, x: &[f64]) -> Result<f64, EvalError> {
        let mut v = self.linear_objective.value(x);
        for t in &self.nonlinear_terms {
            if let TermTarget::Objective { coef } = t.target {
                v += coef * t.eval(x)?;
            }
        }
        Ok(v)
    }

    /// Left-hand side of every row at `x`, nonlinear parts included.
    pub fn row_activities(&self, x: &[f64]) -> Result<Vec<f64>, EvalError> {
        let mut act: Vec<f64> = self
            .linear_constraints
            .iter()
            .map(|r| r.activity(x))
            .collect();
        for t in &self.nonlinear_terms {
            if let TermTarget::Constraint { row, coef } = t.target {
                act[row] += coef * t.eval(x)?;
            }
        }
        Ok(act)
    }

    /// Largest row or bound violation at `x` (rows with nonlinear parts are
    /// evaluated exactly).
    pub fn constraint_violation(&self, x: &[f64]) -> Result<f64, EvalError> {
        let act = self.row_activities(x)?;
        let rows = self
            .linear_constraints
            .iter()
            .zip(act)
            .map(|(r, a)| match r.sense {
                ConstraintSense::Le => (a - r.rhs).max(0.0),
                ConstraintSense::Ge => (r.rhs - a).max(0.0),
                ConstraintSense::Eq => (a - r.rhs).abs(),
            });
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lo - xi).max(xi - v.hi).max(0.0));
        Ok(rows.chain(bounds).fold(0.0, f64::max))
    }

    /// Adds the objective `expr`, split into constant, linear and grouped
    /// nonlinear parts. `groups` lists variable sets that must share a term.
    pub fn set_objective_expr(
        &mut self,
        expr: &Expr,
        groups: &[Vec<VarId>],
    ) -> Result<(), ProblemError> {
        let parts = self.decompose(expr, groups)?;
        self.linear_objective = parts.linear;
        for (vars, pieces) in parts.terms {
            self.push_term(vars, pieces, TermTarget::Objective { coef: 1.0 });
        }
        Ok(())
    }

    /// Adds the row `expr (sense) rhs`, moving constants to the right and
    /// attaching nonlinear parts as terms on the new row.
    pub fn add_constraint_expr(
        &mut self,
        expr: &Expr,
        sense: ConstraintSense,
        rhs: f64,
        groups: &[Vec<VarId>],
    ) -> Result<usize, ProblemError> {
        let parts = self.decompose(expr, groups)?;
        let row = self.linear_constraints.len();
        let mut c = LinearConstraint::new(parts.linear.terms, sense, rhs - parts.linear.constant);
        c.name = Some(format!("c{row}"));
        self.linear_constraints.push(c);
        for (vars, pieces) in parts.terms {
            self.push_term(vars, pieces, TermTarget::Constraint { row, coef: 1.0 });
        }
        Ok(row)
    }

    fn push_term(&mut self, vars: Vec<VarId>, pieces: Vec<(f64, Expr)>, target: TermTarget) {
        let names: Vec<String> = vars
            .iter()
            .map(|v| self.variables[v.0].name.clone())
            .collect();
        let label = pieces
            .iter()
            .map(|(s, e)| {
                if *s == 1.0 {
                    e.to_string()
                } else {
                    format!("{s}*({e})")
                }
            })
            .collect::<Vec<_>>()
            .join(" + ");
        let func: TermFn = Arc::new(move |z: &[f64]| {
            let mut total = 0.0;
            for (s, e) in &pieces {
                total += s * e.eval_at(&names, z)?;
            }
            Ok(total)
        });
        self.nonlinear_terms.push(NonlinearTerm {
            vars,
            func,
            target,
            label,
        });
    }

    fn decompose(&self, expr: &Expr, groups: &[Vec<VarId>]) -> Result<Decomposed, ProblemError> {
        let mut leaves = Vec::new();
        flatten(expr, 1.0, &mut leaves)?;
        let mut linear = LinearExpr::new();
        let mut nonlinear: Vec<(Vec<VarId>, f64, Expr)> = Vec::new();
        for (s, e) in leaves {
            if e.is_constant() {
                linear.constant += s * e.eval(&|_: &str| None)?;
                continue;
            }
            let mut lin = BTreeMap::new();
            let mut k = 0.0;
            if linear_form(&e, 1.0, &mut lin, &mut k)? {
                for (name, c) in lin {
                    let v = self
                        .var_by_name(&name)
                        .ok_or(ProblemError::UnknownVariable(name))?;
                    linear.add_term(v, s * c);
                }
                linear.constant += s * k;
                continue;
            }
            let mut vars = Vec::new();
            for name in e.variables() {
                vars.push(
                    self.var_by_name(&name)
                        .ok_or(ProblemError::UnknownVariable(name))?,
                );
            }
            nonlinear.push((vars, s, e));
        }
        linear.normalize();

        // connected components over shared variables and declared groups
        let n = self.variables.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut a: usize) -> usize {
            while p[a] != a {
                p[a] = p[p[a]];
                a = p[a];
            }
            a
        }
        let union = |p: &mut Vec<usize>, vs: &[VarId]| {
            for w in vs.windows(2) {
                let (a, b) = (find(p, w[0].0), find(p, w[1].0));
                if a != b {
                    p[a.max(b)] = a.min(b);
                }
            }
        };
        for (vars, _, _) in &nonlinear {
            union(&mut parent, vars);
        }
        for g in groups {
            union(&mut parent, g);
        }
        let mut by_root: BTreeMap<usize, TermGroup> = BTreeMap::new();
        for (vars, s, e) in nonlinear {
            let root = find(&mut parent, vars[0].0);
            let entry = by_root.entry(root).or_default();
            entry.0.extend(vars);
            entry.1.push((s, e));
        }
        let terms = by_root
            .into_values()
            .map(|(mut vars, pieces)| {
                vars.sort();
                vars.dedup();
                (vars, pieces)
            })
            .collect();
        Ok(Decomposed { linear, terms })
    }
}

/// Variables of one nonlinear term and its scaled addends.
type TermGroup = (Vec<VarId>, Vec<(f64, Expr)>);

struct Decomposed {
    linear: LinearExpr,
    terms: Vec<TermGroup>,
}

fn const_value(e: &Expr) -> Result<Option<f64>, EvalError> {
    if e.is_constant() {
        Ok(Some(e.eval(&|_: &str| None)?))
    } else {
        Ok(None)
    }
}

/// Splits a top-level sum into scaled addends, pulling out constant factors
/// and constant divisors.
fn flatten(e: &Expr, scale: f64, out: &mut Vec<(f64, Expr)>) -> Result<(), EvalError> {
    match e {
        Expr::Add(a, b) => {
            flatten(a, scale, out)?;
            flatten(b, scale, out)
        }
        Expr::Sub(a, b) => {
            flatten(a, scale, out)?;
            flatten(b, -scale, out)
        }
        Expr::Neg(a) => flatten(a, -scale, out),
        Expr::Mul(a, b) => {
            if let Some(c) = const_value(a)? {
                flatten(b, scale * c, out)
            } else if let Some(c) = const_value(b)? {
                flatten(a, scale * c, out)
            } else {
                out.push((scale, e.clone()));
                Ok(())
            }
        }
        Expr::Div(a, b) => match const_value(b)? {
            Some(c) if c != 0.0 => flatten(a, scale / c, out),
            _ => {
                out.push((scale, e.clone()));
                Ok(())
            }
        },
        _ => {
            out.push((scale, e.clone()));
            Ok(())
        }
    }
}

/// Collects `e` as `Σ c·var + k` when it is affine.
fn linear_form(
    e: &Expr,
    scale: f64,
    coeffs: &mut BTreeMap<String, f64>,
    k: &mut f64,
) -> Result<bool, EvalError> {
    if let Some(c) = const_value(e)? {
        *k += scale * c;
        return Ok(true);
    }
    Ok(match e {
        Expr::Var(n) => {
            *coeffs.entry(n.clone()).or_insert(0.0) += scale;
            true
        }
        Expr::Neg(a) => linear_form(a, -scale, coeffs, k)?,
        Expr::Add(a, b) => linear_form(a, scale, coeffs, k)? && linear_form(b, scale, coeffs, k)?,
        Expr::Sub(a, b) => linear_form(a, scale, coeffs, k)? && linear_form(b, -scale, coeffs, k)?,
        Expr::Mul(a, b) => {
            if let Some(c) = const_value(a)? {
                linear_form(b, scale * c, coeffs, k)?
            } else if let Some(c) = const_value(b)? {
                linear_form(a, scale * c, coeffs, k)?
            } else {
                false
            }
        }
        Expr::Div(a, b) => match const_value(b)? {
            Some(c) if c != 0.0 => linear_form(a, scale / c, coeffs, k)?,
            _ => false,
        },
        _ => false,
    })
}
