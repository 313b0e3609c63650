use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Grid, PwlError};
use crate::Real;

/// Multi-index `(l_1, …, l_d)` of a subrectangle, `0 ≤ l_k < L_k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubrectIndex(pub Vec<usize>);

/// One Kuhn simplex: a subrectangle plus the order in which coordinates are
/// stepped along the vertex path (0-based variable indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SimplexId {
    pub subrect: SubrectIndex,
    pub perm: Vec<usize>,
}

impl SimplexId {
    pub fn new(subrect: Vec<usize>, perm: Vec<usize>) -> Self {
        SimplexId {
            subrect: SubrectIndex(subrect),
            perm,
        }
    }

    fn check<T: Real>(&self, grid: &Grid<T>) -> Result<(), PwlError> {
        let d = grid.dims();
        let cell = &self.subrect.0;
        if cell.len() != d || self.perm.len() != d {
            return Err(PwlError::InvalidSimplex);
        }
        if cell.iter().enumerate().any(|(k, &l)| l >= grid.pieces(k)) {
            return Err(PwlError::InvalidSimplex);
        }
        let mut seen = vec![false; d];
        for &p in &self.perm {
            if p >= d || seen[p] {
                return Err(PwlError::InvalidSimplex);
            }
            seen[p] = true;
        }
        Ok(())
    }
}

/// All permutations of `0..d` in lexicographic order. The position of a
/// permutation in this list is its simplex index `j` inside a subrectangle.
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..d).collect();
    let mut out = vec![cur.clone()];
    // next lexicographic permutation until the order is descending
    while let Some(i) = (1..d).rev().find(|&i| cur[i - 1] < cur[i]) {
        let j = (i..d).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
    out
}

/// Step order of each variable along the path of `perm`: `order[perm[p]] = p`.
pub fn step_order(perm: &[usize]) -> Vec<usize> {
    let mut order = vec![0; perm.len()];
    for (p, &k) in perm.iter().enumerate() {
        order[k] = p;
    }
    order
}

/// Total simplex count `d! · ∏ L_k`.
pub fn count_simplices<T: Real>(grid: &Grid<T>) -> usize {
    let fact: usize = (1..=grid.dims()).product();
    fact * grid.subrect_count()
}

/// Finds a simplex whose closed region contains `z`.
///
/// The cell is found by bisection on each breakpoint array, with a point on
/// the last breakpoint assigned to the last cell. The path order sorts the
/// fractional coordinates in descending order, ties by ascending variable
/// index.
pub fn locate<T: Real>(grid: &Grid<T>, z: &[T]) -> Result<SimplexId, PwlError> {
    let d = grid.dims();
    if z.len() != d {
        return Err(PwlError::DimensionMismatch {
            expected: d,
            got: z.len(),
        });
    }
    let mut cell = Vec::with_capacity(d);
    let mut frac = Vec::with_capacity(d);
    for (k, &x) in z.iter().enumerate() {
        let bounds = grid.bounds(k);
        if !bounds.contains(x) {
            return Err(PwlError::OutsideDomain {
                dim: k,
                value: x.to_f64().unwrap_or(f64::NAN),
                lo: bounds.lo.to_f64().unwrap_or(f64::NAN),
                hi: bounds.hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        let l = grid.cell_of(k, x);
        let b = grid.breakpoints(k);
        cell.push(l);
        frac.push((x - b[l]) / (b[l + 1] - b[l]));
    }
    let mut perm: Vec<usize> = (0..d).collect();
    perm.sort_by(|&a, &b| {
        frac[b]
            .partial_cmp(&frac[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(SimplexId::new(cell, perm))
}

/// Grid multi-indices of the `d + 1` path vertices of a simplex. Vertex 0 is
/// the subrectangle origin; vertex `p` steps coordinate `perm[p-1]` of
/// vertex `p-1`.
pub fn simplex_vertex_indices<T: Real>(
    grid: &Grid<T>,
    id: &SimplexId,
) -> Result<Vec<Vec<usize>>, PwlError> {
    id.check(grid)?;
    let mut cur = id.subrect.0.clone();
    let mut out = Vec::with_capacity(grid.dims() + 1);
    out.push(cur.clone());
    for &k in &id.perm {
        cur[k] += 1;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Coordinates of the `d + 1` path vertices of a simplex.
pub fn simplex_vertices<T: Real>(grid: &Grid<T>, id: &SimplexId) -> Result<Vec<Vec<T>>, PwlError> {
    Ok(simplex_vertex_indices(grid, id)?
        .iter()
        .map(|idx| grid.vertex_point(idx))
        .collect())
}

impl<T: Real> Grid<T> {
    /// Every simplex of the grid: subrectangles in lexicographic order, and
    /// within each the permutations in lexicographic order.
    pub fn simplices(&self) -> impl Iterator<Item = SimplexId> + '_ {
        let perms = permutations(self.dims());
        self.subrects().flat_map(move |cell| {
            perms
                .clone()
                .into_iter()
                .map(move |perm| SimplexId::new(cell.clone(), perm))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::{build_grid, Interval};
    use std::collections::HashSet;

    fn unit(d: usize) -> Grid<f64> {
        build_grid(&vec![Interval::new(0.0, 1.0).unwrap(); d], &vec![1; d]).unwrap()
    }

    #[test]
    fn permutations_are_lexicographic() {
        assert_eq!(permutations(1), vec![vec![0]]);
        assert_eq!(
            permutations(3),
            vec![
                vec![0, 1, 2],
                vec![0, 2, 1],
                vec![1, 0, 2],
                vec![1, 2, 0],
                vec![2, 0, 1],
                vec![2, 1, 0]
            ]
        );
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn simplex_counts() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let g = build_grid(&[iv, iv], &[2, 2]).unwrap();
        assert_eq!(count_simplices(&g), 8);
        let g = build_grid(&[iv], &[5]).unwrap();
        assert_eq!(count_simplices(&g), 5);
        let g = build_grid(&[iv; 3], &[3, 3, 3]).unwrap();
        assert_eq!(count_simplices(&g), 162);
        let ids: HashSet<_> = g.simplices().collect();
        assert_eq!(ids.len(), 162);
    }

    #[test]
    fn vertex_paths_on_unit_square() {
        let g = unit(2);
        let a = simplex_vertices(&g, &SimplexId::new(vec![0, 0], vec![0, 1])).unwrap();
        assert_eq!(a, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        let b = simplex_vertices(&g, &SimplexId::new(vec![0, 0], vec![1, 0])).unwrap();
        assert_eq!(b, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn vertex_path_on_unit_cube() {
        let g = unit(3);
        let v = simplex_vertices(&g, &SimplexId::new(vec![0, 0, 0], vec![0, 1, 2])).unwrap();
        assert_eq!(
            v,
            vec![
                vec![0.0, 0.0, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![1.0, 1.0, 0.0],
                vec![1.0, 1.0, 1.0]
            ]
        );
    }

    #[test]
    fn locate_sorts_fractions_descending() {
        let g = unit(2);
        let id = locate(&g, &[0.25, 0.75]).unwrap();
        assert_eq!(id, SimplexId::new(vec![0, 0], vec![1, 0]));
        // shared diagonal: tie broken by ascending variable index
        let id = locate(&g, &[0.5, 0.5]).unwrap();
        assert_eq!(id.perm, vec![0, 1]);
    }

    #[test]
    fn locate_maps_upper_endpoint_to_last_cell() {
        let iv = Interval::new(0.0, 2.0).unwrap();
        let g = build_grid(&[iv, iv], &[2, 2]).unwrap();
        let id = locate(&g, &[2.0, 1.0]).unwrap();
        assert_eq!(id.subrect.0, vec![1, 1]);
        assert_eq!(id.perm, vec![0, 1]);
    }

    #[test]
    fn locate_rejects_points_outside() {
        let g = unit(2);
        assert!(matches!(
            locate(&g, &[1.5, 0.0]),
            Err(PwlError::OutsideDomain { dim: 0, .. })
        ));
        assert!(matches!(
            locate(&g, &[0.5]),
            Err(PwlError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_ids_are_rejected() {
        let g = unit(2);
        assert_eq!(
            simplex_vertices(&g, &SimplexId::new(vec![1, 0], vec![0, 1])),
            Err(PwlError::InvalidSimplex)
        );
        assert_eq!(
            simplex_vertices(&g, &SimplexId::new(vec![0, 0], vec![0, 0])),
            Err(PwlError::InvalidSimplex)
        );
    }

    #[test]
    fn step_order_inverts_perm() {
        assert_eq!(step_order(&[2, 0, 1]), vec![1, 2, 0]);
    }
}
