//! Sparse LU factorization with partial pivoting.
//!
//! Left-looking column-by-column elimination: for each column a sparse
//! triangular solve against the already computed part of `L` is performed on
//! the nonzero reach of that column (found by depth-first search), then the
//! largest remaining entry is chosen as pivot. No fill-reducing ordering is
//! applied; grid matrices in natural row-major order are banded, which keeps
//! fill proportional to the bandwidth.

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

/// Relative pivot size below which a column is declared singular.
const SINGULAR_RTOL: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    // Column k of L (unit diagonal not stored), rows in original numbering.
    l_offsets: Vec<usize>,
    l_rows: Vec<usize>,
    l_vals: Vec<f64>,
    // Column j of U, rows in pivot numbering (strictly above the diagonal).
    u_offsets: Vec<usize>,
    u_rows: Vec<usize>,
    u_vals: Vec<f64>,
    u_diag: Vec<f64>,
    // pivot_row[k] = original row chosen at step k.
    pivot_row: Vec<usize>,
}

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
        }
        let at = a.transpose(); // rows of `at` are columns of `a`
        let mut pinv = vec![usize::MAX; n];
        let mut pivot_row = vec![0usize; n];
        let mut x = vec![0.0; n];
        let mut visited = vec![usize::MAX; n];
        let mut reach: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();

        let mut l_offsets = Vec::with_capacity(n + 1);
        let mut l_rows = Vec::with_capacity(a.nnz() * 2);
        let mut l_vals = Vec::with_capacity(a.nnz() * 2);
        let mut u_offsets = Vec::with_capacity(n + 1);
        let mut u_rows = Vec::with_capacity(a.nnz() * 2);
        let mut u_vals = Vec::with_capacity(a.nnz() * 2);
        let mut u_diag = vec![0.0; n];
        l_offsets.push(0);
        u_offsets.push(0);

        for j in 0..n {
            let (acols, avals) = at.row(j);
            // Reach of column j in the graph of L, in topological order (reverse postorder).
            reach.clear();
            for &r in acols {
                if visited[r] == j {
                    continue;
                }
                visited[r] = j;
                stack.push((r, 0));
                while let Some(&(node, mut child)) = stack.last() {
                    let k = pinv[node];
                    let (s, e) = if k == usize::MAX { (0, 0) } else { (l_offsets[k], l_offsets[k + 1]) };
                    let mut next_node = None;
                    while s + child < e {
                        let next = l_rows[s + child];
                        child += 1;
                        if visited[next] != j {
                            visited[next] = j;
                            next_node = Some(next);
                            break;
                        }
                    }
                    stack.last_mut().unwrap().1 = child;
                    match next_node {
                        Some(next) => stack.push((next, 0)),
                        None => {
                            reach.push(node);
                            stack.pop();
                        }
                    }
                }
            }
            let mut col_max = 0.0f64;
            for (&r, &v) in acols.iter().zip(avals) {
                x[r] = v;
                col_max = col_max.max(v.abs());
            }
            for idx in (0..reach.len()).rev() {
                let r = reach[idx];
                let k = pinv[r];
                if k == usize::MAX {
                    continue;
                }
                let xr = x[r];
                if xr != 0.0 {
                    for p in l_offsets[k]..l_offsets[k + 1] {
                        x[l_rows[p]] -= l_vals[p] * xr;
                    }
                }
            }
            // Split reach into U entries (pivoted rows) and pivot candidates.
            let mut piv = usize::MAX;
            let mut piv_abs = -1.0;
            for &r in &reach {
                if pinv[r] == usize::MAX {
                    let v = x[r].abs();
                    if v > piv_abs || (v == piv_abs && r < piv) {
                        piv_abs = v;
                        piv = r;
                    }
                }
            }
            if piv == usize::MAX || piv_abs <= SINGULAR_RTOL * col_max || piv_abs == 0.0 {
                return Err(Error::Singular { pivot: j });
            }
            let d = x[piv];
            pinv[piv] = j;
            pivot_row[j] = piv;
            u_diag[j] = d;
            for &r in &reach {
                let k = pinv[r];
                if k < j && x[r] != 0.0 {
                    u_rows.push(k);
                    u_vals.push(x[r]);
                } else if k == usize::MAX && x[r] != 0.0 {
                    l_rows.push(r);
                    l_vals.push(x[r] / d);
                }
                x[r] = 0.0;
            }
            l_offsets.push(l_rows.len());
            u_offsets.push(u_rows.len());
        }

        Ok(SparseLu { n, l_offsets, l_rows, l_vals, u_offsets, u_rows, u_vals, u_diag, pivot_row })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries in `L` and `U` (including the diagonal of `U`).
    pub fn fill(&self) -> usize {
        self.l_vals.len() + self.u_vals.len() + self.n
    }

    pub fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: f.len() });
        }
        let mut b = f.to_vec();
        let mut y = vec![0.0; self.n];
        for k in 0..self.n {
            let yk = b[self.pivot_row[k]];
            y[k] = yk;
            if yk != 0.0 {
                for p in self.l_offsets[k]..self.l_offsets[k + 1] {
                    b[self.l_rows[p]] -= self.l_vals[p] * yk;
                }
            }
        }
        for j in (0..self.n).rev() {
            let zj = y[j] / self.u_diag[j];
            y[j] = zj;
            if zj != 0.0 {
                for p in self.u_offsets[j]..self.u_offsets[j + 1] {
                    y[self.u_rows[p]] -= self.u_vals[p] * zj;
                }
            }
        }
        Ok(y)
    }
}

/// Solve `A u = f` by sparse LU with partial pivoting.
pub fn direct_solve(a: &CsrMatrix, f: &[f64]) -> Result<Vec<f64>> {
    SparseLu::factor(a)?.solve(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amg::csr::{laplacian_1d, laplacian_2d, norm2};

    #[test]
    fn identity_solve_returns_rhs() {
        let f = vec![1.0, -2.0, 3.5];
        assert_eq!(direct_solve(&CsrMatrix::identity(3), &f).unwrap(), f);
    }

    #[test]
    fn green_function_column_of_1d_laplacian() {
        let a = laplacian_1d(5);
        let f = vec![0.0, 0.0, 1.0, 0.0, 0.0];
        let u = direct_solve(&a, &f).unwrap();
        let r = a.residual(&u, &f);
        assert!(norm2(&r) <= 1e-12);
        // G(i, 2) = (i+1)(n-2)/(n+1) for i <= 2 with n = 5
        assert!((u[2] - 1.5).abs() < 1e-12);
        assert!((u[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pivoting_is_needed_and_performed() {
        // zero leading diagonal forces a row swap
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let u = direct_solve(&a, &[2.0, 5.0]).unwrap();
        assert!((u[0] - 3.0).abs() < 1e-14 && (u[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_reports_pivot() {
        let a = CsrMatrix::from_triplets(3, 3, &[(0, 0, 1.0), (1, 0, 1.0), (2, 2, 1.0)]).unwrap();
        match SparseLu::factor(&a) {
            Err(Error::Singular { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn poisson_residual_small() {
        let a = laplacian_2d(20);
        let f: Vec<f64> = (0..400).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
        let u = direct_solve(&a, &f).unwrap();
        assert!(norm2(&a.residual(&u, &f)) <= 1e-10 * (1.0 + norm2(&f)));
    }
}
