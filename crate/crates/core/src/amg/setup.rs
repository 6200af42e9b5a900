//! Ruge–Stüben setup phase: strength of connection, C/F splitting,
//! interpolation and Galerkin coarse operators.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::csr::{CsrBuilder, CsrMatrix};
use crate::error::{Error, Result};

/// Strong connections of every row of a matrix.
#[derive(Debug, Clone)]
pub struct StrengthGraph {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    /// Rows with no off-diagonal entries at all.
    decoupled: Vec<bool>,
}

impl StrengthGraph {
    pub fn len(&self) -> usize {
        self.decoupled.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decoupled.is_empty()
    }

    /// Points that row `i` depends on strongly.
    pub fn strong(&self, i: usize) -> &[usize] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn is_decoupled(&self, i: usize) -> bool {
        self.decoupled[i]
    }

    /// For every point, the rows that depend strongly on it.
    pub fn transpose(&self) -> StrengthGraph {
        let n = self.len();
        let mut counts = vec![0usize; n + 1];
        for &j in &self.cols {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; self.cols.len()];
        for i in 0..n {
            for &j in self.strong(i) {
                cols[next[j]] = i;
                next[j] += 1;
            }
        }
        StrengthGraph { offsets: counts, cols, decoupled: self.decoupled.clone() }
    }
}

/// `j` is a strong connection of `i` when `-a_ij >= theta * max_k(-a_ik)`, the
/// maximum running over negative off-diagonal couplings. Couplings to rows that
/// have no off-diagonal entries are ignored: relaxation solves those rows exactly.
pub fn strength_graph(a: &CsrMatrix, theta: f64) -> StrengthGraph {
    let n = a.nrows();
    let decoupled: Vec<bool> = (0..n)
        .map(|i| {
            let (cols, _) = a.row(i);
            cols.iter().all(|&j| j == i)
        })
        .collect();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut out = Vec::with_capacity(a.nnz());
    offsets.push(0);
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let max_neg = cols
            .iter()
            .zip(vals)
            .filter(|&(&j, _)| j != i && !decoupled[j])
            .map(|(_, &v)| -v)
            .fold(0.0f64, f64::max);
        if max_neg > 0.0 {
            let cut = theta * max_neg;
            for (&j, &v) in cols.iter().zip(vals) {
                if j != i && !decoupled[j] && -v >= cut {
                    out.push(j);
                }
            }
        }
        offsets.push(out.len());
    }
    StrengthGraph { offsets, cols: out, decoupled }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Coarse,
    Fine,
}

/// Partition of a level's unknowns into coarse and fine points.
#[derive(Debug, Clone)]
pub struct CfSplit {
    kinds: Vec<PointKind>,
    coarse_index: Vec<usize>,
    n_coarse: usize,
}

impl CfSplit {
    pub fn from_kinds(kinds: Vec<PointKind>) -> Self {
        let mut coarse_index = vec![usize::MAX; kinds.len()];
        let mut n_coarse = 0;
        for (i, k) in kinds.iter().enumerate() {
            if *k == PointKind::Coarse {
                coarse_index[i] = n_coarse;
                n_coarse += 1;
            }
        }
        CfSplit { kinds, coarse_index, n_coarse }
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, i: usize) -> PointKind {
        self.kinds[i]
    }

    pub fn is_coarse(&self, i: usize) -> bool {
        self.kinds[i] == PointKind::Coarse
    }

    pub fn n_coarse(&self) -> usize {
        self.n_coarse
    }

    /// Index of coarse point `i` on the next level.
    pub fn coarse_index(&self, i: usize) -> Option<usize> {
        let c = self.coarse_index[i];
        (c != usize::MAX).then_some(c)
    }

    /// C-points in ascending order followed by F-points in ascending order.
    pub fn relaxation_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).filter(|&i| self.is_coarse(i)).collect();
        order.extend((0..self.len()).filter(|&i| !self.is_coarse(i)));
        order
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Unassigned,
    Coarse,
    Fine,
}

/// Classical two-pass Ruge–Stüben coarsening.
///
/// First pass: repeatedly pick the unassigned point that strongly influences the
/// most unassigned points, make it C and the points depending on it F.
/// Second pass: every strong F–F connection must share a common C-point; the
/// first violating neighbour is promoted to C, a second violation promotes the
/// F-point itself instead.
///
/// Points whose strong set is empty become C, except decoupled rows (no
/// off-diagonal entries), which stay F with an empty interpolation row.
pub fn cf_split(s: &StrengthGraph) -> CfSplit {
    let n = s.len();
    let st = s.transpose();
    let mut mark = vec![Mark::Unassigned; n];
    let mut measure = vec![0i64; n];
    let mut heap = BinaryHeap::with_capacity(n);
    for i in 0..n {
        if s.is_decoupled(i) {
            mark[i] = Mark::Fine;
            continue;
        }
        measure[i] = st.strong(i).len() as i64;
        heap.push((measure[i], Reverse(i)));
    }

    while let Some((m, Reverse(i))) = heap.pop() {
        if mark[i] != Mark::Unassigned || m != measure[i] {
            continue;
        }
        if m <= 0 {
            // Nothing left that influences anyone; settled below.
            break;
        }
        mark[i] = Mark::Coarse;
        for &j in st.strong(i) {
            if mark[j] == Mark::Unassigned {
                mark[j] = Mark::Fine;
                for &k in s.strong(j) {
                    if mark[k] == Mark::Unassigned {
                        measure[k] += 1;
                        heap.push((measure[k], Reverse(k)));
                    }
                }
            }
        }
        for &k in s.strong(i) {
            if mark[k] == Mark::Unassigned {
                measure[k] -= 1;
                heap.push((measure[k], Reverse(k)));
            }
        }
    }
    for i in 0..n {
        if mark[i] == Mark::Unassigned {
            let has_c = s.strong(i).iter().any(|&j| mark[j] == Mark::Coarse);
            mark[i] = if has_c { Mark::Fine } else { Mark::Coarse };
        }
    }

    // Second pass.
    let mut in_ci = vec![usize::MAX; n];
    for i in 0..n {
        if mark[i] != Mark::Fine || s.is_decoupled(i) {
            continue;
        }
        for &j in s.strong(i) {
            if mark[j] == Mark::Coarse {
                in_ci[j] = i;
            }
        }
        let mut tentative: Option<usize> = None;
        for &j in s.strong(i) {
            if mark[j] != Mark::Fine || s.strong(j).iter().any(|&k| in_ci[k] == i) {
                continue;
            }
            match tentative {
                None => {
                    tentative = Some(j);
                    mark[j] = Mark::Coarse;
                    in_ci[j] = i;
                }
                Some(t) => {
                    mark[t] = Mark::Fine;
                    mark[i] = Mark::Coarse;
                    break;
                }
            }
        }
    }

    CfSplit::from_kinds(
        mark.into_iter()
            .map(|m| if m == Mark::Coarse { PointKind::Coarse } else { PointKind::Fine })
            .collect(),
    )
}

/// Classical Ruge–Stüben interpolation.
///
/// For an F-point `i` with strong C neighbours `C_i`, strong F neighbours `F_i`
/// and remaining (weak) neighbours `W_i`:
///
/// `w_ij = -(a_ij + sum_{k in F_i} a_ik a_kj / sum_{m in C_i} a_km) / (a_ii + sum_{n in W_i} a_in)`
///
/// A strong F neighbour without couplings into `C_i` is collapsed to the
/// diagonal. Couplings to decoupled rows are dropped.
pub fn build_interpolation(a: &CsrMatrix, split: &CfSplit, strength: &StrengthGraph) -> Result<CsrMatrix> {
    let n = a.nrows();
    let nc = split.n_coarse();
    let mut builder = CsrBuilder::with_capacity(n, nc, n + a.nnz());
    let mut row: Vec<(usize, f64)> = Vec::new();
    // position of j in the current C_i, or MAX
    let mut ci_slot = vec![usize::MAX; n];
    let mut is_strong = vec![usize::MAX; n];
    let mut ci: Vec<usize> = Vec::new();
    let mut num: Vec<f64> = Vec::new();

    for i in 0..n {
        row.clear();
        if let Some(c) = split.coarse_index(i) {
            row.push((c, 1.0));
            builder.push_unsorted_row(&mut row);
            continue;
        }
        if strength.is_decoupled(i) {
            builder.push_unsorted_row(&mut row);
            continue;
        }
        ci.clear();
        for &j in strength.strong(i) {
            is_strong[j] = i;
            if split.is_coarse(j) {
                ci_slot[j] = ci.len();
                ci.push(j);
            }
        }
        if ci.is_empty() {
            return Err(Error::InvalidMatrix(format!("F-point {i} has no strong C neighbour")));
        }
        num.clear();
        num.resize(ci.len(), 0.0);
        let (cols, vals) = a.row(i);
        let mut diag = 0.0;
        for (&j, &aij) in cols.iter().zip(vals) {
            if j == i {
                diag += aij;
                continue;
            }
            if strength.is_decoupled(j) {
                continue;
            }
            if is_strong[j] == i && ci_slot[j] != usize::MAX && ci[ci_slot[j]] == j {
                num[ci_slot[j]] += aij;
            } else if is_strong[j] == i && aij < 0.0 {
                // strong F neighbour: distribute a_ij over C_i through row j
                let (kc, kv) = a.row(j);
                let mut denom = 0.0;
                for (&m, &akm) in kc.iter().zip(kv) {
                    if akm < 0.0 && in_ci(m, &ci, &ci_slot) {
                        denom += akm;
                    }
                }
                if denom < 0.0 {
                    for (&m, &akm) in kc.iter().zip(kv) {
                        if akm < 0.0 && in_ci(m, &ci, &ci_slot) {
                            num[ci_slot[m]] += aij * akm / denom;
                        }
                    }
                } else {
                    diag += aij;
                }
            } else {
                diag += aij;
            }
        }
        if diag == 0.0 || !diag.is_finite() {
            return Err(Error::InvalidMatrix(format!("degenerate interpolation denominator in row {i}")));
        }
        for (slot, &j) in ci.iter().enumerate() {
            let w = -num[slot] / diag;
            row.push((split.coarse_index(j).unwrap(), w));
        }
        for &j in &ci {
            ci_slot[j] = usize::MAX;
        }
        builder.push_unsorted_row(&mut row);
    }
    Ok(builder.finish())
}

#[inline]
fn in_ci(m: usize, ci: &[usize], ci_slot: &[usize]) -> bool {
    let s = ci_slot[m];
    s != usize::MAX && ci[s] == m
}

/// Galerkin coarse operator `P^T A P`. Entries below `1e-300` in magnitude are dropped.
pub fn galerkin(a: &CsrMatrix, p: &CsrMatrix) -> Result<CsrMatrix> {
    let r = p.transpose();
    galerkin_with_restriction(a, p, &r)
}

pub(crate) fn galerkin_with_restriction(a: &CsrMatrix, p: &CsrMatrix, r: &CsrMatrix) -> Result<CsrMatrix> {
    if a.ncols() != p.nrows() || a.nrows() != r.ncols() {
        return Err(Error::DimensionMismatch { expected: a.ncols(), found: p.nrows() });
    }
    let ap = a.matmul(p)?;
    let mut c = r.matmul(&ap)?;
    c.drop_zeros(1e-300);
    Ok(c)
}
