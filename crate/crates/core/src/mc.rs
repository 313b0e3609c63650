//! Multiple-choice MILP encoding of one piecewise-linear term.
//!
//! Each simplex `(i, j)` of the term's grid gets a binary `μ_ij` and one
//! continuous copy `z_k^ij` per term variable. Exactly one binary is active;
//! the copies of the active simplex equal the term variables and satisfy the
//! chain rows that carve the simplex out of its subrectangle, while every
//! other simplex's copies are forced to zero.

use crate::milp::{ConstraintSense, LinearConstraint, LinearExpr, LpProblem, VarId};
use crate::pwl::{hyperplane_from_values, permutations, step_order, Grid, PwlError, SimplexId};

/// Term values at every grid vertex, indexed by the vertex linear index.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexValues {
    values: Vec<f64>,
}

impl VertexValues {
    /// Evaluates `f` once at every vertex of `grid`.
    pub fn compute<F>(grid: &Grid<f64>, mut f: F) -> Result<Self, PwlError>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let mut values = Vec::with_capacity(grid.vertex_count());
        for lin in 0..grid.vertex_count() {
            let p = grid.vertex_point(&grid.vertex_multi_index(lin));
            let v = f(&p);
            if !v.is_finite() {
                return Err(PwlError::NonFiniteValue { vertex: p });
            }
            values.push(v);
        }
        Ok(VertexValues { values })
    }

    pub fn at(&self, grid: &Grid<f64>, idx: &[usize]) -> f64 {
        self.values[grid.vertex_linear_index(idx)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Subtracts a constant from every value.
    pub fn shift(&mut self, by: f64) {
        self.values.iter_mut().for_each(|v| *v -= by);
    }
}

/// Variable ids allocated for one term.
#[derive(Debug, Clone, PartialEq)]
pub struct McLayout {
    /// `μ_ij` at `i·m + j`, with `m = d!`.
    pub mu_vars: Vec<VarId>,
    /// `z_k^ij` at `(i·m + j)·d + k`.
    pub copy_vars: Vec<VarId>,
    dims: usize,
    perms_per_cell: usize,
}

impl McLayout {
    pub fn mu(&self, i: usize, j: usize) -> VarId {
        self.mu_vars[i * self.perms_per_cell + j]
    }

    pub fn copy(&self, i: usize, j: usize, k: usize) -> VarId {
        self.copy_vars[(i * self.perms_per_cell + j) * self.dims + k]
    }
}

/// The rows and value expression for one term.
#[derive(Debug, Clone, PartialEq)]
pub struct McEncoding {
    pub layout: McLayout,
    pub link_constraints: Vec<LinearConstraint>,
    pub objective_expr: LinearExpr,
}

/// Adds `μ_ij` binaries and `z_k^ij` copies to `model`. A copy is bounded
/// by its subinterval widened to include 0, which the chain rows imply.
pub fn allocate(model: &mut LpProblem, grid: &Grid<f64>, prefix: &str) -> McLayout {
    let d = grid.dims();
    let perms = permutations(d);
    let m = perms.len();
    let mut mu_vars = Vec::with_capacity(grid.subrect_count() * m);
    let mut copy_vars = Vec::with_capacity(grid.subrect_count() * m * d);
    for (i, cell) in grid.subrects().enumerate() {
        for j in 0..m {
            mu_vars.push(model.add_binary(format!("{prefix}mu_{i}_{j}")));
            for (k, &l) in cell.iter().enumerate() {
                let b = grid.breakpoints(k);
                copy_vars.push(model.add_var(
                    format!("{prefix}z_{i}_{j}_{k}"),
                    b[l].min(0.0),
                    b[l + 1].max(0.0),
                    false,
                ));
            }
        }
    }
    McLayout {
        mu_vars,
        copy_vars,
        dims: d,
        perms_per_cell: m,
    }
}

/// One linking row per variable (`Σ_ij z_k^ij = z_k`) and the cardinality
/// row `Σ_ij μ_ij = 1`.
pub fn encode_selection(layout: &McLayout, z_vars: &[VarId]) -> Vec<LinearConstraint> {
    let d = layout.dims;
    let mut rows = Vec::with_capacity(d + 1);
    for (k, &zk) in z_vars.iter().enumerate() {
        let mut coeffs: Vec<(VarId, f64)> = layout
            .copy_vars
            .iter()
            .skip(k)
            .step_by(d)
            .map(|&v| (v, 1.0))
            .collect();
        coeffs.push((zk, -1.0));
        rows.push(LinearConstraint::new(coeffs, ConstraintSense::Eq, 0.0));
    }
    rows.push(LinearConstraint::new(
        layout.mu_vars.iter().map(|&v| (v, 1.0)).collect(),
        ConstraintSense::Eq,
        1.0,
    ));
    rows
}

/// Two rows per copy. For the first variable on the path:
/// `b_k^l μ ≤ z_k ≤ b_k^{l+1} μ`. For later ones, with `p` the variable
/// stepped just before `k`: `b_k^l μ ≤ z_k ≤ b_k^l μ + (Δ_k/Δ_p)(z_p − b_p^l μ)`.
pub fn encode_chain(grid: &Grid<f64>, layout: &McLayout) -> Vec<LinearConstraint> {
    let d = grid.dims();
    let perms = permutations(d);
    let mut rows = Vec::with_capacity(2 * layout.copy_vars.len());
    for (i, cell) in grid.subrects().enumerate() {
        for (j, perm) in perms.iter().enumerate() {
            let order = step_order(perm);
            let mu = layout.mu(i, j);
            for k in 0..d {
                let b = grid.breakpoints(k);
                let (lo_k, hi_k) = (b[cell[k]], b[cell[k] + 1]);
                let zk = layout.copy(i, j, k);
                rows.push(LinearConstraint::new(
                    nonzero(vec![(zk, 1.0), (mu, -lo_k)]),
                    ConstraintSense::Ge,
                    0.0,
                ));
                if order[k] == 0 {
                    rows.push(LinearConstraint::new(
                        nonzero(vec![(zk, 1.0), (mu, -hi_k)]),
                        ConstraintSense::Le,
                        0.0,
                    ));
                } else {
                    let p = perm[order[k] - 1];
                    let lo_p = grid.breakpoints(p)[cell[p]];
                    let ratio = grid.spacing(k, cell[k]) / grid.spacing(p, cell[p]);
                    rows.push(LinearConstraint::new(
                        nonzero(vec![
                            (zk, 1.0),
                            (layout.copy(i, j, p), -ratio),
                            (mu, ratio * lo_p - lo_k),
                        ]),
                        ConstraintSense::Le,
                        0.0,
                    ));
                }
            }
        }
    }
    rows
}

fn nonzero(mut terms: Vec<(VarId, f64)>) -> Vec<(VarId, f64)> {
    terms.retain(|t| t.1 != 0.0);
    terms
}

/// `Σ_ij [ μ_ij f(b_0^ij) + Σ_k slope_k^ij (z_k^ij − μ_ij b_k^l) ]`.
pub fn encode_term_value(
    grid: &Grid<f64>,
    layout: &McLayout,
    values: &VertexValues,
) -> Result<LinearExpr, PwlError> {
    let d = grid.dims();
    let perms = permutations(d);
    let mut expr = LinearExpr::new();
    let mut path_values = Vec::with_capacity(d + 1);
    for (i, cell) in grid.subrects().enumerate() {
        for (j, perm) in perms.iter().enumerate() {
            let mut idx = cell.clone();
            path_values.clear();
            path_values.push(values.at(grid, &idx));
            for &k in perm {
                idx[k] += 1;
                path_values.push(values.at(grid, &idx));
            }
            let id = SimplexId::new(cell.clone(), perm.clone());
            let h = hyperplane_from_values(grid, &id, &path_values)?;
            let mut mu_coef = path_values[0];
            for k in 0..d {
                let slope = h.rho[k];
                mu_coef -= slope * grid.breakpoints(k)[cell[k]];
                if slope != 0.0 {
                    expr.add_term(layout.copy(i, j, k), slope);
                }
            }
            if mu_coef != 0.0 {
                expr.add_term(layout.mu(i, j), mu_coef);
            }
        }
    }
    Ok(expr)
}

impl McEncoding {
    /// Allocates the term's variables in `model` and builds its rows and
    /// value expression. The rows are not added; see [`McEncoding::install`].
    pub fn build(
        model: &mut LpProblem,
        grid: &Grid<f64>,
        z_vars: &[VarId],
        values: &VertexValues,
        prefix: &str,
    ) -> Result<Self, PwlError> {
        if z_vars.len() != grid.dims() {
            return Err(PwlError::DimensionMismatch {
                expected: grid.dims(),
                got: z_vars.len(),
            });
        }
        let layout = allocate(model, grid, prefix);
        let mut link_constraints = encode_selection(&layout, z_vars);
        link_constraints.extend(encode_chain(grid, &layout));
        let objective_expr = encode_term_value(grid, &layout, values)?;
        Ok(McEncoding {
            layout,
            link_constraints,
            objective_expr,
        })
    }

    /// Appends the encoding's rows to `model`.
    pub fn install(&self, model: &mut LpProblem) {
        for row in &self.link_constraints {
            model.add_row(row.clone());
        }
    }
}
