//! Sparse LU factorization of a simplex basis with product-form updates.
//!
//! Columns are factorized left-looking (Gilbert–Peierls): each column is
//! solved against the lower factor built so far, restricted to the rows it
//! can reach, then a pivot row is chosen by threshold partial pivoting that
//! prefers rows touched by few basis columns. Basis changes append eta
//! columns until the caller refactorizes.

const NONE: usize = usize::MAX;
const THRESHOLD: f64 = 0.1;
const SINGULAR_TOL: f64 = 1e-11;
const DROP_TOL: f64 = 1e-14;

/// Basis slots left without a pivot, and the rows nobody pivoted on.
#[derive(Debug)]
pub(crate) struct Singular {
    pub slots: Vec<usize>,
    pub rows: Vec<usize>,
}

struct Eta {
    slot: usize,
    pivot: f64,
    idx: Vec<usize>,
    val: Vec<f64>,
}

pub(crate) struct LuFactors {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_slot: Vec<usize>,
    /// Multipliers below the pivot of each step, keyed by row.
    l_start: Vec<usize>,
    l_row: Vec<usize>,
    l_val: Vec<f64>,
    /// Entries above the diagonal of each step, keyed by earlier step.
    u_start: Vec<usize>,
    u_step: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
}

/// Factorizes the `m × m` basis whose slot `s` holds column `col(s)`.
pub(crate) fn factorize<'a, F>(m: usize, col: F) -> Result<LuFactors, Singular>
where
    F: Fn(usize) -> (&'a [usize], &'a [f64]),
{
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&s| col(s).0.len());
    let mut row_count = vec![0usize; m];
    for s in 0..m {
        for &r in col(s).0 {
            row_count[r] += 1;
        }
    }

    let mut f = LuFactors {
        m,
        pivot_row: Vec::with_capacity(m),
        pivot_slot: Vec::with_capacity(m),
        l_start: vec![0],
        l_row: Vec::new(),
        l_val: Vec::new(),
        u_start: vec![0],
        u_step: Vec::new(),
        u_val: Vec::new(),
        u_diag: Vec::with_capacity(m),
        etas: Vec::new(),
    };
    let mut step_of_row = vec![NONE; m];
    let mut w = vec![0.0; m];
    let mut in_pattern = vec![false; m];
    let mut pattern: Vec<usize> = Vec::new();
    let mut seen_step: Vec<bool> = Vec::new();
    let mut reach: Vec<usize> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut singular_slots = Vec::new();

    for &slot in &order {
        let (rows, vals) = col(slot);
        let mut col_max: f64 = 0.0;
        for (&r, &v) in rows.iter().zip(vals) {
            w[r] += v;
            col_max = col_max.max(v.abs());
            if !in_pattern[r] {
                in_pattern[r] = true;
                pattern.push(r);
            }
        }

        // steps reachable through the lower factor, applied in step order
        seen_step.resize(f.pivot_row.len(), false);
        reach.clear();
        for &r in rows {
            let p = step_of_row[r];
            if p != NONE && !seen_step[p] {
                seen_step[p] = true;
                stack.push(p);
            }
        }
        while let Some(p) = stack.pop() {
            reach.push(p);
            for e in f.l_start[p]..f.l_start[p + 1] {
                let q = step_of_row[f.l_row[e]];
                if q != NONE && !seen_step[q] {
                    seen_step[q] = true;
                    stack.push(q);
                }
            }
        }
        reach.sort_unstable();
        for &p in &reach {
            seen_step[p] = false;
            let xv = w[f.pivot_row[p]];
            if xv == 0.0 {
                continue;
            }
            for e in f.l_start[p]..f.l_start[p + 1] {
                let r = f.l_row[e];
                w[r] -= f.l_val[e] * xv;
                if !in_pattern[r] {
                    in_pattern[r] = true;
                    pattern.push(r);
                }
            }
        }

        let max_abs = pattern
            .iter()
            .filter(|&&r| step_of_row[r] == NONE)
            .map(|&r| w[r].abs())
            .fold(0.0, f64::max);
        if max_abs <= SINGULAR_TOL * col_max.max(1.0) {
            singular_slots.push(slot);
        } else {
            let mut best = NONE;
            for &r in &pattern {
                if step_of_row[r] != NONE || w[r].abs() < THRESHOLD * max_abs {
                    continue;
                }
                let better = best == NONE
                    || row_count[r] < row_count[best]
                    || (row_count[r] == row_count[best]
                        && (w[r].abs() > w[best].abs()
                            || (w[r].abs() == w[best].abs() && r < best)));
                if better {
                    best = r;
                }
            }
            let diag = w[best];
            for &r in &pattern {
                if r == best || w[r].abs() <= DROP_TOL {
                    continue;
                }
                if step_of_row[r] != NONE {
                    f.u_step.push(step_of_row[r]);
                    f.u_val.push(w[r]);
                } else {
                    f.l_row.push(r);
                    f.l_val.push(w[r] / diag);
                }
            }
            step_of_row[best] = f.pivot_row.len();
            f.pivot_row.push(best);
            f.pivot_slot.push(slot);
            f.u_diag.push(diag);
            f.l_start.push(f.l_row.len());
            f.u_start.push(f.u_step.len());
        }
        for &r in &pattern {
            w[r] = 0.0;
            in_pattern[r] = false;
        }
        pattern.clear();
    }

    if singular_slots.is_empty() {
        Ok(f)
    } else {
        let rows = (0..m).filter(|&r| step_of_row[r] == NONE).collect();
        Err(Singular {
            slots: singular_slots,
            rows,
        })
    }
}

impl LuFactors {
    pub(crate) fn eta_count(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B x = b`. `rhs` is indexed by row and is overwritten;
    /// the result is indexed by basis slot.
    pub(crate) fn ftran(&self, rhs: &mut [f64], out: &mut [f64]) {
        // forward with L
        for p in 0..self.m {
            let xv = rhs[self.pivot_row[p]];
            if xv == 0.0 {
                continue;
            }
            for e in self.l_start[p]..self.l_start[p + 1] {
                rhs[self.l_row[e]] -= self.l_val[e] * xv;
            }
        }
        // backward with U, column oriented
        for p in (0..self.m).rev() {
            let xp = rhs[self.pivot_row[p]] / self.u_diag[p];
            out[self.pivot_slot[p]] = xp;
            if xp == 0.0 {
                continue;
            }
            for e in self.u_start[p]..self.u_start[p + 1] {
                rhs[self.pivot_row[self.u_step[e]]] -= self.u_val[e] * xp;
            }
        }
        for eta in &self.etas {
            let xr = out[eta.slot] / eta.pivot;
            out[eta.slot] = xr;
            if xr != 0.0 {
                for (&i, &a) in eta.idx.iter().zip(&eta.val) {
                    out[i] -= a * xr;
                }
            }
        }
    }

    /// Solves `Bᵀ y = c`. `c` is indexed by basis slot and is overwritten;
    /// the result is indexed by row.
    pub(crate) fn btran(&self, c: &mut [f64], out: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let s: f64 = eta.idx.iter().zip(&eta.val).map(|(&i, &a)| a * c[i]).sum();
            c[eta.slot] = (c[eta.slot] - s) / eta.pivot;
        }
        // Uᵀ forward: z_p = (c_p − Σ_{q<p} U_qp z_q) / U_pp
        let mut z = vec![0.0; self.m];
        for p in 0..self.m {
            let mut v = c[self.pivot_slot[p]];
            for e in self.u_start[p]..self.u_start[p + 1] {
                v -= self.u_val[e] * z[self.u_step[e]];
            }
            z[p] = v / self.u_diag[p];
        }
        // Lᵀ backward
        for p in (0..self.m).rev() {
            let mut v = z[p];
            for e in self.l_start[p]..self.l_start[p + 1] {
                v -= self.l_val[e] * out[self.l_row[e]];
            }
            out[self.pivot_row[p]] = v;
        }
    }

    /// Records that slot `slot` was replaced by a column whose FTRAN result
    /// is `alpha`.
    pub(crate) fn push_eta(&mut self, alpha: &[f64], slot: usize) {
        let mut idx = Vec::new();
        let mut val = Vec::new();
        for (i, &a) in alpha.iter().enumerate() {
            if i != slot && a.abs() > DROP_TOL {
                idx.push(i);
                val.push(a);
            }
        }
        self.etas.push(Eta {
            slot,
            pivot: alpha[slot],
            idx,
            val,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Dense {
        cols: Vec<(Vec<usize>, Vec<f64>)>,
    }

    impl Dense {
        fn new(a: &[&[f64]]) -> Self {
            let m = a.len();
            let cols = (0..m)
                .map(|j| {
                    let mut rows = Vec::new();
                    let mut vals = Vec::new();
                    for (i, row) in a.iter().enumerate() {
                        if row[j] != 0.0 {
                            rows.push(i);
                            vals.push(row[j]);
                        }
                    }
                    (rows, vals)
                })
                .collect();
            Dense { cols }
        }
        fn mul(&self, x: &[f64]) -> Vec<f64> {
            let mut out = vec![0.0; x.len()];
            for (j, (rows, vals)) in self.cols.iter().enumerate() {
                for (&r, &v) in rows.iter().zip(vals) {
                    out[r] += v * x[j];
                }
            }
            out
        }
        fn mul_t(&self, y: &[f64]) -> Vec<f64> {
            self.cols
                .iter()
                .map(|(rows, vals)| rows.iter().zip(vals).map(|(&r, &v)| v * y[r]).sum())
                .collect()
        }
    }

    fn check_solves(a: &Dense) {
        let m = a.cols.len();
        let lu = factorize(m, |s| (&a.cols[s].0[..], &a.cols[s].1[..])).unwrap();
        let x_true: Vec<f64> = (0..m).map(|i| i as f64 - 1.5).collect();
        let mut b = a.mul(&x_true);
        let mut x = vec![0.0; m];
        lu.ftran(&mut b, &mut x);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10, "{x:?}");
        }
        let mut c = a.mul_t(&x_true);
        let mut y = vec![0.0; m];
        lu.btran(&mut c, &mut y);
        for (u, v) in y.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-10, "{y:?}");
        }
    }

    #[test]
    fn solves_small_systems() {
        check_solves(&Dense::new(&[
            &[2.0, 1.0, 0.0],
            &[1.0, 3.0, 1.0],
            &[0.0, 1.0, 4.0],
        ]));
        check_solves(&Dense::new(&[
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 1.0],
            &[1.0, 0.0, 0.0],
        ]));
        check_solves(&Dense::new(&[
            &[1e-3, 1.0, 0.0, 2.0],
            &[1.0, 0.0, 0.0, -1.0],
            &[0.0, 5.0, -1.0, 0.0],
            &[3.0, 0.0, 1.0, 1.0],
        ]));
    }

    #[test]
    fn reports_singular_slots() {
        let a = Dense::new(&[&[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0], &[0.0, 0.0, 1.0]]);
        let err = factorize(3, |s| (&a.cols[s].0[..], &a.cols[s].1[..]))
            .err()
            .unwrap();
        assert_eq!(err.slots.len(), 1);
        assert_eq!(err.rows.len(), 1);
    }

    #[test]
    fn eta_update_matches_refactorization() {
        let a = Dense::new(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 4.0]]);
        let mut lu = factorize(3, |s| (&a.cols[s].0[..], &a.cols[s].1[..])).unwrap();
        // replace slot 1 with column (1, 0, 2)
        let new_col = [1.0, 0.0, 2.0];
        let mut rhs = new_col.to_vec();
        let mut alpha = vec![0.0; 3];
        lu.ftran(&mut rhs, &mut alpha);
        lu.push_eta(&alpha, 1);
        let b = Dense::new(&[&[2.0, 1.0, 0.0], &[1.0, 0.0, 1.0], &[0.0, 2.0, 4.0]]);
        let x_true = [0.5, -1.0, 2.0];
        let mut rhs = b.mul(&x_true);
        let mut x = vec![0.0; 3];
        lu.ftran(&mut rhs, &mut x);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
        let mut c = b.mul_t(&x_true);
        let mut y = vec![0.0; 3];
        lu.btran(&mut c, &mut y);
        for (u, v) in y.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
