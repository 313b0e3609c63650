use serde::{Deserialize, Serialize};

use super::PwlError;
use crate::Real;

/// Closed interval `[lo, hi]` with finite endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    /// Builds an interval, rejecting non-finite or inverted bounds.
    pub fn new(lo: T, hi: T) -> Result<Self, PwlError> {
        let iv = Interval { lo, hi };
        iv.validate(0)?;
        Ok(iv)
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<(), PwlError> {
        if !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(PwlError::NonFiniteBound { dim });
        }
        if self.lo > self.hi {
            return Err(PwlError::InvertedInterval {
                dim,
                lo: self.lo.to_f64().unwrap_or(f64::NAN),
                hi: self.hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(())
    }

    pub fn width(&self) -> T {
        self.hi - self.lo
    }

    pub fn contains(&self, x: T) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Whether `self` lies inside `outer`.
    pub fn is_within(&self, outer: &Interval<T>) -> bool {
        outer.lo <= self.lo && self.hi <= outer.hi
    }

    pub fn clamp(&self, x: T) -> T {
        x.max(self.lo).min(self.hi)
    }
}

/// Per-variable breakpoint arrays partitioning a box into subrectangles.
///
/// Breakpoints are strictly increasing, start at the lower bound and end at
/// the upper bound of each variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    breakpoints: Vec<Vec<T>>,
}

/// Equally spaced breakpoints: `pieces[k] + 1` points from `lo` to `hi`, with
/// both endpoints exact.
pub fn build_grid<T: Real>(bounds: &[Interval<T>], pieces: &[usize]) -> Result<Grid<T>, PwlError> {
    check_dims(bounds, pieces)?;
    let breakpoints = bounds
        .iter()
        .zip(pieces)
        .enumerate()
        .map(|(k, (iv, &n))| {
            iv.validate(k)?;
            if n == 0 {
                return Err(PwlError::ZeroPieces { dim: k });
            }
            if iv.is_degenerate() {
                return Err(PwlError::DegenerateInterval { dim: k });
            }
            Ok(equal_spacing(iv.lo, iv.hi, n))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Grid::from_breakpoints(breakpoints)
}

/// Grid whose breakpoints are integers, for integer-valued variables.
///
/// Bounds are rounded inward to integers. When the integer range has at most
/// `pieces` unit steps every integer becomes a breakpoint; otherwise the
/// equally spaced breakpoints are rounded to the nearest integer. Dimensions
/// flagged `false` in `integral` are spaced as in [`build_grid`].
pub fn build_integer_grid<T: Real>(
    bounds: &[Interval<T>],
    pieces: &[usize],
    integral: &[bool],
) -> Result<Grid<T>, PwlError> {
    check_dims(bounds, pieces)?;
    if integral.len() != bounds.len() {
        return Err(PwlError::DimensionMismatch {
            expected: bounds.len(),
            got: integral.len(),
        });
    }
    let mut breakpoints = Vec::with_capacity(bounds.len());
    for (k, (iv, &n)) in bounds.iter().zip(pieces).enumerate() {
        iv.validate(k)?;
        if n == 0 {
            return Err(PwlError::ZeroPieces { dim: k });
        }
        if !integral[k] {
            if iv.is_degenerate() {
                return Err(PwlError::DegenerateInterval { dim: k });
            }
            breakpoints.push(equal_spacing(iv.lo, iv.hi, n));
            continue;
        }
        let lo = iv.lo.ceil();
        let hi = iv.hi.floor();
        if hi <= lo {
            return Err(PwlError::DegenerateInterval { dim: k });
        }
        let span = hi - lo;
        let mut pts: Vec<T> = if span <= T::count(n) {
            let steps = span.to_usize().unwrap_or(0);
            (0..=steps).map(|i| lo + T::count(i)).collect()
        } else {
            equal_spacing(lo, hi, n)
                .into_iter()
                .map(|b| b.round())
                .collect()
        };
        pts.dedup();
        breakpoints.push(pts);
    }
    Grid::from_breakpoints(breakpoints)
}

fn check_dims<T>(bounds: &[Interval<T>], pieces: &[usize]) -> Result<(), PwlError> {
    if bounds.len() != pieces.len() {
        return Err(PwlError::DimensionMismatch {
            expected: bounds.len(),
            got: pieces.len(),
        });
    }
    Ok(())
}

fn equal_spacing<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    let width = hi - lo;
    let denom = T::count(n);
    let mut pts: Vec<T> = (0..=n)
        .map(|l| lo + width * (T::count(l) / denom))
        .collect();
    pts[0] = lo;
    pts[n] = hi;
    pts
}

impl<T: Real> Grid<T> {
    /// Wraps explicit breakpoint arrays after checking the grid invariants.
    pub fn from_breakpoints(breakpoints: Vec<Vec<T>>) -> Result<Self, PwlError> {
        for (k, b) in breakpoints.iter().enumerate() {
            if b.len() < 2 {
                return Err(PwlError::ZeroPieces { dim: k });
            }
            if b.iter().any(|x| !x.is_finite()) {
                return Err(PwlError::NonFiniteBound { dim: k });
            }
            if b.windows(2).any(|w| w[0] >= w[1]) {
                return Err(PwlError::UnsortedBreakpoints { dim: k });
            }
        }
        Ok(Grid { breakpoints })
    }

    pub fn dims(&self) -> usize {
        self.breakpoints.len()
    }

    /// Number of pieces `L_k` of variable `k`.
    pub fn pieces(&self, k: usize) -> usize {
        self.breakpoints[k].len() - 1
    }

    pub fn pieces_all(&self) -> Vec<usize> {
        (0..self.dims()).map(|k| self.pieces(k)).collect()
    }

    pub fn breakpoints(&self, k: usize) -> &[T] {
        &self.breakpoints[k]
    }

    pub fn bounds(&self, k: usize) -> Interval<T> {
        let b = &self.breakpoints[k];
        Interval {
            lo: b[0],
            hi: b[b.len() - 1],
        }
    }

    /// Number of subrectangles, `∏ L_k`.
    pub fn subrect_count(&self) -> usize {
        (0..self.dims()).map(|k| self.pieces(k)).product()
    }

    /// Number of grid vertices, `∏ (L_k + 1)`.
    pub fn vertex_count(&self) -> usize {
        self.breakpoints.iter().map(Vec::len).product()
    }

    /// Row-major linear index of a vertex multi-index.
    pub fn vertex_linear_index(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.breakpoints)
            .fold(0, |acc, (&i, b)| acc * b.len() + i)
    }

    /// Inverse of [`vertex_linear_index`](Self::vertex_linear_index).
    pub fn vertex_multi_index(&self, mut linear: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for k in (0..self.dims()).rev() {
            let n = self.breakpoints[k].len();
            idx[k] = linear % n;
            linear /= n;
        }
        idx
    }

    /// Coordinates of the vertex with the given multi-index.
    pub fn vertex_point(&self, idx: &[usize]) -> Vec<T> {
        idx.iter()
            .zip(&self.breakpoints)
            .map(|(&i, b)| b[i])
            .collect()
    }

    /// Row-major linear index of a subrectangle.
    pub fn subrect_linear_index(&self, cell: &[usize]) -> usize {
        cell.iter()
            .enumerate()
            .fold(0, |acc, (k, &l)| acc * self.pieces(k) + l)
    }

    /// Subrectangle multi-indices in lexicographic order.
    pub fn subrects(&self) -> impl Iterator<Item = Vec<usize>> + '_ {
        let total = self.subrect_count();
        (0..total).map(move |mut linear| {
            let mut cell = vec![0; self.dims()];
            for k in (0..self.dims()).rev() {
                let n = self.pieces(k);
                cell[k] = linear % n;
                linear /= n;
            }
            cell
        })
    }

    /// Width `b_k^{l+1} − b_k^l` of piece `l` of variable `k`.
    pub fn spacing(&self, k: usize, l: usize) -> T {
        self.breakpoints[k][l + 1] - self.breakpoints[k][l]
    }

    /// Index `l` of the piece containing `x`; the upper endpoint maps to the
    /// last piece.
    pub(crate) fn cell_of(&self, k: usize, x: T) -> usize {
        let b = &self.breakpoints[k];
        let upper = b.partition_point(|&v| v <= x);
        upper.saturating_sub(1).min(b.len() - 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval<f64> {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn two_pieces_on_zero_two() {
        let g = build_grid(&[iv(0.0, 2.0)], &[2]).unwrap();
        assert_eq!(g.breakpoints(0), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn four_pieces_on_symmetric_interval() {
        let g = build_grid(&[iv(-1.0, 1.0)], &[4]).unwrap();
        assert_eq!(g.breakpoints(0), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn cube_with_three_pieces_has_27_cells() {
        let g = build_grid(&[iv(0.0, 1.0); 3], &[3, 3, 3]).unwrap();
        assert_eq!(g.subrect_count(), 27);
        assert_eq!(g.subrects().count(), 27);
    }

    #[test]
    fn endpoints_are_exact() {
        let g = build_grid(&[iv(-5.12, 5.12)], &[6]).unwrap();
        let b = g.breakpoints(0);
        assert_eq!(b[0], -5.12);
        assert_eq!(b[6], 5.12);
        assert_eq!(b[3], 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            build_grid(&[iv(0.0, 1.0)], &[0]),
            Err(PwlError::ZeroPieces { dim: 0 })
        );
        assert_eq!(
            build_grid(
                &[Interval {
                    lo: 0.0,
                    hi: f64::INFINITY
                }],
                &[2]
            ),
            Err(PwlError::NonFiniteBound { dim: 0 })
        );
        assert_eq!(
            build_grid(&[iv(1.0, 1.0)], &[2]),
            Err(PwlError::DegenerateInterval { dim: 0 })
        );
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn f32_grid() {
        let g = build_grid(&[Interval::new(0.0f32, 3.0).unwrap()], &[3]).unwrap();
        assert_eq!(g.breakpoints(0), &[0.0f32, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn integer_grid_uses_every_integer_when_range_is_small() {
        let g = build_integer_grid(&[iv(0.5, 3.2)], &[4], &[true]).unwrap();
        assert_eq!(g.breakpoints(0), &[1.0, 2.0, 3.0]);
        let g = build_integer_grid(&[iv(0.0, 10.0)], &[4], &[true]).unwrap();
        assert_eq!(g.breakpoints(0), &[0.0, 3.0, 5.0, 8.0, 10.0]);
    }

    #[test]
    fn cell_lookup_clamps_upper_endpoint() {
        let g = build_grid(&[iv(0.0, 2.0)], &[2]).unwrap();
        assert_eq!(g.cell_of(0, 0.0), 0);
        assert_eq!(g.cell_of(0, 0.999), 0);
        assert_eq!(g.cell_of(0, 1.0), 1);
        assert_eq!(g.cell_of(0, 2.0), 1);
    }

    #[test]
    fn vertex_index_roundtrip() {
        let g = build_grid(&[iv(0.0, 1.0), iv(0.0, 1.0), iv(0.0, 1.0)], &[2, 3, 1]).unwrap();
        for lin in 0..g.vertex_count() {
            assert_eq!(g.vertex_linear_index(&g.vertex_multi_index(lin)), lin);
        }
    }
}
