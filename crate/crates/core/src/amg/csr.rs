use crate::error::{Error, Result};

/// Square or rectangular sparse matrix in compressed sparse row form.
///
/// Column indices are strictly increasing within each row and explicit zeros
/// are removed on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from raw CSR arrays, validating the structure.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != nrows + 1 || row_offsets[0] != 0 {
            return Err(Error::InvalidMatrix("bad row offsets".into()));
        }
        if col_indices.len() != values.len() || *row_offsets.last().unwrap() != values.len() {
            return Err(Error::InvalidMatrix("offsets do not match entry count".into()));
        }
        for i in 0..nrows {
            let (s, e) = (row_offsets[i], row_offsets[i + 1]);
            if s > e {
                return Err(Error::InvalidMatrix(format!("row offsets decrease at row {i}")));
            }
            for k in s..e {
                if col_indices[k] >= ncols {
                    return Err(Error::InvalidMatrix(format!("column out of range in row {i}")));
                }
                if k > s && col_indices[k] <= col_indices[k - 1] {
                    return Err(Error::InvalidMatrix(format!("columns not increasing in row {i}")));
                }
                if !values[k].is_finite() {
                    return Err(Error::NonFinite { index: k });
                }
            }
        }
        let mut m = CsrMatrix { nrows, ncols, row_offsets, col_indices, values };
        m.drop_zeros(0.0);
        Ok(m)
    }

    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::InvalidMatrix(format!("entry ({r}, {c}) out of range")));
            }
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut builder = CsrBuilder::with_capacity(nrows, ncols, triplets.len());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..nrows {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|k| (cols[k], vals[k])));
            builder.push_unsorted_row(&mut row);
        }
        Ok(builder.finish())
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    /// Entry (i, j), zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    /// r = f - A u
    pub fn residual_into(&self, u: &[f64], f: &[f64], r: &mut [f64]) {
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let au: f64 = cols.iter().zip(vals).map(|(&j, &a)| a * u[j]).sum();
            r[i] = f[i] - au;
        }
    }

    pub fn residual(&self, u: &[f64], f: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.nrows];
        self.residual_into(u, f, &mut r);
        r
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        // Rows are visited in increasing order, so each transposed row comes out sorted.
        for i in 0..self.nrows {
            let (rc, rv) = self.row(i);
            for (&j, &a) in rc.iter().zip(rv) {
                cols[next[j]] = i;
                vals[next[j]] = a;
                next[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets: counts,
            col_indices: cols,
            values: vals,
        }
    }

    /// Sparse product `self * other` with a dense row accumulator.
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: other.nrows });
        }
        let mut acc = vec![0.0; other.ncols];
        let mut marker = vec![usize::MAX; other.ncols];
        let mut pattern: Vec<usize> = Vec::new();
        let mut builder = CsrBuilder::with_capacity(self.nrows, other.ncols, self.nnz() + other.nnz());
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..self.nrows {
            pattern.clear();
            let (ac, av) = self.row(i);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&j, &b) in bc.iter().zip(bv) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        pattern.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            row.clear();
            row.extend(pattern.iter().map(|&j| (j, acc[j])));
            builder.push_unsorted_row(&mut row);
        }
        Ok(builder.finish())
    }

    /// Remove stored entries with magnitude `<= threshold` (exact zeros when 0).
    pub fn drop_zeros(&mut self, threshold: f64) {
        let mut w = 0;
        let mut offsets = Vec::with_capacity(self.nrows + 1);
        offsets.push(0);
        for i in 0..self.nrows {
            let (s, e) = (self.row_offsets[i], self.row_offsets[i + 1]);
            for k in s..e {
                if self.values[k].abs() > threshold {
                    self.col_indices[w] = self.col_indices[k];
                    self.values[w] = self.values[k];
                    w += 1;
                }
            }
            offsets.push(w);
        }
        self.col_indices.truncate(w);
        self.values.truncate(w);
        self.row_offsets = offsets;
    }

    /// Dense copy, row-major. Intended for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, di) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                di[j] = a;
            }
        }
        d
    }
}

/// Incremental row-by-row CSR construction.
#[derive(Debug)]
pub struct CsrBuilder {
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
    expected_rows: usize,
}

impl CsrBuilder {
    pub fn with_capacity(nrows: usize, ncols: usize, nnz: usize) -> Self {
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        row_offsets.push(0);
        CsrBuilder {
            ncols,
            row_offsets,
            col_indices: Vec::with_capacity(nnz),
            values: Vec::with_capacity(nnz),
            expected_rows: nrows,
        }
    }

    /// Append a row given as unsorted `(col, value)` pairs; duplicates are summed and
    /// exact zeros dropped. The slice is sorted in place.
    pub fn push_unsorted_row(&mut self, row: &mut [(usize, f64)]) {
        row.sort_unstable_by_key(|e| e.0);
        let mut k = 0;
        while k < row.len() {
            let c = row[k].0;
            let mut v = row[k].1;
            k += 1;
            while k < row.len() && row[k].0 == c {
                v += row[k].1;
                k += 1;
            }
            if v != 0.0 {
                debug_assert!(c < self.ncols);
                self.col_indices.push(c);
                self.values.push(v);
            }
        }
        self.row_offsets.push(self.values.len());
    }

    pub fn finish(self) -> CsrMatrix {
        assert_eq!(self.row_offsets.len(), self.expected_rows + 1, "row count mismatch");
        CsrMatrix {
            nrows: self.expected_rows,
            ncols: self.ncols,
            row_offsets: self.row_offsets,
            col_indices: self.col_indices,
            values: self.values,
        }
    }
}

/// 1D Dirichlet Laplacian `tridiag(-1, 2, -1)` of size `n`.
pub fn laplacian_1d(n: usize) -> CsrMatrix {
    let mut t = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i > 0 {
            t.push((i, i - 1, -1.0));
        }
        t.push((i, i, 2.0));
        if i + 1 < n {
            t.push((i, i + 1, -1.0));
        }
    }
    CsrMatrix::from_triplets(n, n, &t).expect("valid stencil")
}

/// 2D 5-point Dirichlet Laplacian on a `k x k` interior grid, row-major.
pub fn laplacian_2d(k: usize) -> CsrMatrix {
    let n = k * k;
    let mut t = Vec::with_capacity(5 * n);
    for i in 0..k {
        for j in 0..k {
            let p = i * k + j;
            t.push((p, p, 4.0));
            if i > 0 {
                t.push((p, p - k, -1.0));
            }
            if i + 1 < k {
                t.push((p, p + k, -1.0));
            }
            if j > 0 {
                t.push((p, p - 1, -1.0));
            }
            if j + 1 < k {
                t.push((p, p + 1, -1.0));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &t).expect("valid stencil")
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
