use serde::{Deserialize, Serialize};

use super::{locate, simplex_vertex_indices, Grid, PwlError, SimplexId};
use crate::Real;

/// Affine function `nu + rho · z` interpolating `f` on one simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane<T> {
    pub nu: T,
    pub rho: Vec<T>,
}

impl<T: Real> Hyperplane<T> {
    pub fn eval(&self, z: &[T]) -> T {
        self.rho
            .iter()
            .zip(z)
            .fold(self.nu, |acc, (&r, &x)| acc + r * x)
    }
}

/// Hyperplane through the path vertices of `id`, given `f` at those
/// vertices in path order.
///
/// The slope along variable `k` is the value difference across the path step
/// that moves `k`, divided by the width of `k`'s piece.
pub fn hyperplane_from_values<T: Real>(
    grid: &Grid<T>,
    id: &SimplexId,
    values: &[T],
) -> Result<Hyperplane<T>, PwlError> {
    let idx = simplex_vertex_indices(grid, id)?;
    if values.len() != idx.len() {
        return Err(PwlError::DimensionMismatch {
            expected: idx.len(),
            got: values.len(),
        });
    }
    for (v, i) in values.iter().zip(&idx) {
        if !v.is_finite() {
            return Err(non_finite(grid, i));
        }
    }
    let cell = &id.subrect.0;
    let mut rho = vec![T::zero(); grid.dims()];
    for (p, &k) in id.perm.iter().enumerate() {
        rho[k] = (values[p + 1] - values[p]) / grid.spacing(k, cell[k]);
    }
    let origin = grid.vertex_point(cell);
    let nu = rho
        .iter()
        .zip(&origin)
        .fold(values[0], |acc, (&r, &o)| acc - r * o);
    Ok(Hyperplane { nu, rho })
}

/// Hyperplane interpolating `f` at the `d + 1` vertices of `id`.
pub fn hyperplane_coeffs<T, F>(
    grid: &Grid<T>,
    id: &SimplexId,
    mut f: F,
) -> Result<Hyperplane<T>, PwlError>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let values: Vec<T> = simplex_vertex_indices(grid, id)?
        .iter()
        .map(|i| f(&grid.vertex_point(i)))
        .collect();
    hyperplane_from_values(grid, id, &values)
}

/// Piecewise-linear interpolant of `f` on the triangulated grid, at `z`.
pub fn eval_pwl<T, F>(grid: &Grid<T>, mut f: F, z: &[T]) -> Result<T, PwlError>
where
    T: Real,
    F: FnMut(&[T]) -> T,
{
    let id = locate(grid, z)?;
    let idx = simplex_vertex_indices(grid, &id)?;
    let mut value = T::zero();
    let mut prev = T::zero();
    let cell = &id.subrect.0;
    // f(v0) + Σ_p (f(v_{p+1}) − f(v_p)) · t_{perm[p]}, written relative to the
    // cell origin to avoid cancellation in nu.
    for (p, vi) in idx.iter().enumerate() {
        let fv = f(&grid.vertex_point(vi));
        if !fv.is_finite() {
            return Err(non_finite(grid, vi));
        }
        if p == 0 {
            value = fv;
        } else {
            let k = id.perm[p - 1];
            let b = grid.breakpoints(k);
            let t = (z[k] - b[cell[k]]) / (b[cell[k] + 1] - b[cell[k]]);
            value += (fv - prev) * t;
        }
        prev = fv;
    }
    Ok(value)
}

fn non_finite<T: Real>(grid: &Grid<T>, idx: &[usize]) -> PwlError {
    PwlError::NonFiniteValue {
        vertex: grid
            .vertex_point(idx)
            .iter()
            .map(|v| v.to_f64().unwrap_or(f64::NAN))
            .collect(),
    }
}
