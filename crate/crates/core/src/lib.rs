//! Sequential piecewise planar approximation (SPPA) for bounded non-convex
//! problems.
//!
//! A problem with nonlinear terms is replaced by a mixed-integer linear
//! surrogate: each term is interpolated on a Kuhn triangulation of its
//! variables' box and encoded with the multiple-choice model. The surrogate
//! is solved with the embedded branch-and-bound solver, the boxes of the
//! nonlinear variables are contracted about the incumbent, and the process
//! repeats until the boxes collapse or the objective stalls.
//!
//! The crate is layered bottom-up:
//!
//! * [`pwl`] – breakpoint grids, simplex enumeration, point location and the
//!   geometric interpolation used as the reference for the MILP encoding.
//! * [`mc`] – the multiple-choice encoding of one piecewise-linear term.
//! * [`milp`] – bounded-variable primal simplex, branch-and-bound and the LP
//!   text format.
//! * [`problems`] – problem model, expression language, problem files and the
//!   benchmark registry.
//! * [`sppa`] – the contraction loop.
//!
//! The geometric layer is generic over the scalar type (see [`Real`]); the
//! solver layers work in `f64`. Aliases for the common instantiations live at
//! the crate root.

pub mod mc;
pub mod milp;
pub mod problems;
pub mod pwl;
mod scalar;
pub mod sppa;

pub use scalar::Real;

pub use mc::{McEncoding, VertexValues};
pub use milp::{
    solve_lp, solve_milp, ConstraintSense, LinearConstraint, LinearExpr, LpProblem, LpSolution,
    LpStatus, MilpSolution, MilpStatus, ObjectiveSense, SolverConfig, VarId,
};
pub use problems::{builtin, parse_expr, ProblemSpec};
pub use pwl::{Grid, Hyperplane, Interval, SimplexId, SubrectIndex};
pub use sppa::{contract_bounds, run, SppaConfig, SppaResult, Termination};

/// Closed interval over `f64`.
pub type Interval64 = Interval<f64>;
/// Closed interval over `f32`.
pub type Interval32 = Interval<f32>;
/// Breakpoint grid over `f64`.
pub type Grid64 = Grid<f64>;
/// Breakpoint grid over `f32`.
pub type Grid32 = Grid<f32>;
/// Simplex hyperplane over `f64`.
pub type Hyperplane64 = Hyperplane<f64>;
/// Simplex hyperplane over `f32`.
pub type Hyperplane32 = Hyperplane<f32>;
