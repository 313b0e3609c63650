//! Breakpoint grids and Kuhn triangulations.
//!
//! A box `H` is split per variable into equally spaced pieces, giving
//! `∏ L_k` subrectangles. Each subrectangle is split into `d!` simplices,
//! one per ordering of the coordinates: the simplex for ordering `perm` is
//! the convex hull of the vertex path that starts at the subrectangle origin
//! and steps coordinate `perm[0]`, then `perm[1]`, and so on, up to the
//! opposite corner. Equivalently it is the set of points whose fractional
//! coordinates inside the cell satisfy `t[perm[0]] ≥ t[perm[1]] ≥ …`.
//!
//! Everything here is generic over [`Real`](crate::Real) and free of any
//! solver dependency; [`eval_pwl`] is the geometric reference against which
//! the MILP encoding in [`mc`](crate::mc) is checked.

mod grid;
mod interp;
mod simplex;

pub use grid::{build_grid, build_integer_grid, Grid, Interval};
pub use interp::{eval_pwl, hyperplane_coeffs, hyperplane_from_values, Hyperplane};
pub use simplex::{
    count_simplices, locate, permutations, simplex_vertex_indices, simplex_vertices, step_order,
    SimplexId, SubrectIndex,
};

use thiserror::Error;

/// Errors raised by grid construction and interpolation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PwlError {
    #[error("bound of variable {dim} is not finite")]
    NonFiniteBound { dim: usize },
    #[error("interval of variable {dim} is inverted: [{lo}, {hi}]")]
    InvertedInterval { dim: usize, lo: f64, hi: f64 },
    #[error("interval of variable {dim} has zero width; degenerate variables must be fixed, not gridded")]
    DegenerateInterval { dim: usize },
    #[error("variable {dim} requested zero pieces")]
    ZeroPieces { dim: usize },
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {dim} = {value} lies outside [{lo}, {hi}]")]
    OutsideDomain {
        dim: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("breakpoints of variable {dim} are not strictly increasing")]
    UnsortedBreakpoints { dim: usize },
    #[error("simplex id does not belong to this grid")]
    InvalidSimplex,
    #[error("function value at vertex {vertex:?} is not finite")]
    NonFiniteValue { vertex: Vec<f64> },
}
