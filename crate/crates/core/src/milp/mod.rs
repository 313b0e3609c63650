//! Self-contained mixed-integer linear programming.
//!
//! LP relaxations are solved with a bounded-variable primal simplex over a
//! sparse LU factorization of the basis (product-form updates, refactorized
//! every 64 pivots). Integer variables are handled by best-bound
//! branch-and-bound with most-fractional branching. Models can be written to
//! and read from the LP text format.

mod bnb;
mod lp_format;
mod lu;
mod model;
mod simplex;

pub use bnb::{solve_milp, BoundEvent, MilpSolution, MilpStats, MilpStatus};
pub use lp_format::{parse_lp, write_lp, LpFormatError};
pub use model::{
    ConstraintSense, LinearConstraint, LinearExpr, LpProblem, ModelError, ObjectiveSense, VarDef,
    VarId,
};
pub use simplex::{solve_lp, LpSolution, LpStatus};

use serde::{Deserialize, Serialize};

/// Tolerances and limits shared by the LP and MILP solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Primal feasibility tolerance on rows and bounds.
    pub feas_tol: f64,
    /// Distance from an integer below which a value counts as integral.
    pub int_tol: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    pub rel_gap: f64,
    /// Reduced-cost tolerance for optimality.
    pub opt_tol: f64,
    /// Maximum number of branch-and-bound nodes (LP solves).
    pub node_limit: usize,
    /// Wall-clock limit in seconds for one solve.
    pub time_limit: Option<f64>,
    /// Replacement bound for continuous variables declared unbounded.
    pub big_bound: f64,
    /// Record the dual bound and incumbent at every node expansion.
    pub record_trace: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            feas_tol: 1e-7,
            int_tol: 1e-6,
            rel_gap: 1e-6,
            opt_tol: 1e-9,
            node_limit: 200_000,
            time_limit: None,
            big_bound: 1e9,
            record_trace: false,
        }
    }
}
