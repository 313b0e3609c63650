use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense variable index inside an [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveSense {
    Minimize,
    Maximize,
}

impl ObjectiveSense {
    /// +1 for minimization, −1 for maximization.
    pub fn sign(self) -> f64 {
        match self {
            ObjectiveSense::Minimize => 1.0,
            ObjectiveSense::Maximize => -1.0,
        }
    }

    /// Whether `a` is strictly better than `b` under this sense.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            ObjectiveSense::Minimize => a < b,
            ObjectiveSense::Maximize => a > b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for ConstraintSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintSense::Le => "<=",
            ConstraintSense::Eq => "=",
            ConstraintSense::Ge => ">=",
        })
    }
}

/// Sparse affine expression `Σ c_j x_j + constant`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinearExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn add_term(&mut self, var: VarId, coef: f64) {
        self.terms.push((var, coef));
    }

    /// Adds `scale * other` to `self`.
    pub fn add_scaled(&mut self, other: &LinearExpr, scale: f64) {
        self.terms
            .extend(other.terms.iter().map(|&(v, c)| (v, c * scale)));
        self.constant += other.constant * scale;
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(v, c)| acc + c * x[v.0])
    }

    /// Merges repeated variables, drops zero coefficients and sorts by
    /// variable.
    pub fn normalize(&mut self) {
        self.terms = merge_terms(&self.terms);
    }
}

pub(crate) fn merge_terms(terms: &[(VarId, f64)]) -> Vec<(VarId, f64)> {
    let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
    for &(v, c) in terms {
        *acc.entry(v).or_insert(0.0) += c;
    }
    acc.into_iter().filter(|&(_, c)| c != 0.0).collect()
}

/// `Σ a_j x_j  (≤ | = | ≥)  rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: Option<String>,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<(VarId, f64)>, sense: ConstraintSense, rhs: f64) -> Self {
        LinearConstraint {
            name: None,
            coeffs,
            sense,
            rhs,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, c)| c * x[v.0]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            ConstraintSense::Le => (a - self.rhs).max(0.0),
            ConstraintSense::Ge => (self.rhs - a).max(0.0),
            ConstraintSense::Eq => (a - self.rhs).abs(),
        }
    }

    /// Row bounds `[lo, hi]` on the activity.
    pub fn range(&self) -> (f64, f64) {
        match self.sense {
            ConstraintSense::Le => (f64::NEG_INFINITY, self.rhs),
            ConstraintSense::Ge => (self.rhs, f64::INFINITY),
            ConstraintSense::Eq => (self.rhs, self.rhs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarDef {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub integer: bool,
}

/// Linear objective, rows, variable bounds and integrality flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub sense: ObjectiveSense,
    pub objective: LinearExpr,
    pub vars: Vec<VarDef>,
    pub rows: Vec<LinearConstraint>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("variable {0} is referenced but not declared")]
    UnknownVariable(VarId),
    #[error("variable `{name}` has invalid bounds [{lo}, {hi}]")]
    InvalidBounds { name: String, lo: f64, hi: f64 },
    #[error("integer variable `{0}` must have finite bounds")]
    UnboundedInteger(String),
    #[error("non-finite coefficient in {0}")]
    NonFiniteCoefficient(String),
}

impl LpProblem {
    pub fn new(sense: ObjectiveSense) -> Self {
        LpProblem {
            sense,
            objective: LinearExpr::new(),
            vars: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, integer: bool) -> VarId {
        self.vars.push(VarDef {
            name: name.into(),
            lo,
            hi,
            integer,
        });
        VarId(self.vars.len() - 1)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, 0.0, 1.0, true)
    }

    pub fn add_row(&mut self, row: LinearConstraint) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_integer(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| r.violation(x));
        let bounds = self
            .vars
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lo - xi).max(xi - v.hi).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// Largest distance of an integer variable from the nearest integer.
    pub fn max_fractionality(&self, x: &[f64]) -> f64 {
        self.vars
            .iter()
            .zip(x)
            .filter(|(v, _)| v.integer)
            .map(|(_, &xi)| (xi - xi.round()).abs())
            .fold(0.0, f64::max)
    }

    /// Checks references, bounds and coefficients.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.vars.len();
        for v in &self.vars {
            if v.lo.is_nan()
                || v.hi.is_nan()
                || v.lo > v.hi
                || v.lo == f64::INFINITY
                || v.hi == f64::NEG_INFINITY
            {
                return Err(ModelError::InvalidBounds {
                    name: v.name.clone(),
                    lo: v.lo,
                    hi: v.hi,
                });
            }
            if v.integer && !(v.lo.is_finite() && v.hi.is_finite()) {
                return Err(ModelError::UnboundedInteger(v.name.clone()));
            }
        }
        let check = |terms: &[(VarId, f64)], what: &dyn Fn() -> String| -> Result<(), ModelError> {
            for &(var, c) in terms {
                if var.0 >= n {
                    return Err(ModelError::UnknownVariable(var));
                }
                if !c.is_finite() {
                    return Err(ModelError::NonFiniteCoefficient(what()));
                }
            }
            Ok(())
        };
        check(&self.objective.terms, &|| "objective".to_string())?;
        if !self.objective.constant.is_finite() {
            return Err(ModelError::NonFiniteCoefficient("objective".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            let label = || r.name.clone().unwrap_or_else(|| format!("row {i}"));
            check(&r.coeffs, &label)?;
            if !r.rhs.is_finite() {
                return Err(ModelError::NonFiniteCoefficient(label()));
            }
        }
        Ok(())
    }
}
