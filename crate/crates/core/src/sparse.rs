//! Compressed sparse row matrices built from triplets.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use nalgebra::DMatrix;

/// Row-compressed sparse matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Sum duplicate entries; the result does not depend on the triplet order
    /// within a row beyond floating-point summation order, which is fixed by
    /// a stable sort.
    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in trip {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; trip.len()];
        let mut vals = vec![0.0; trip.len()];
        for &(r, c, v) in trip {
            let p = next[r];
            cols[p] = c;
            vals[p] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(trip.len());
        let mut out_vals = Vec::with_capacity(trip.len());
        row_ptr.push(0);
        let mut perm: Vec<usize> = Vec::new();
        for r in 0..nrows {
            let (a, b) = (counts[r], counts[r + 1]);
            perm.clear();
            perm.extend(a..b);
            perm.sort_by_key(|&p| cols[p]);
            let mut last = usize::MAX;
            for &p in &perm {
                if cols[p] == last {
                    *out_vals.last_mut().unwrap() += vals[p];
                } else {
                    col_idx.push(cols[p]);
                    out_vals.push(vals[p]);
                    last = cols[p];
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, vals: out_vals }
    }

    /// Zero matrix whose pattern couples every row of a cell to every
    /// column of the same cell. `cell_rows[c]` and `cell_cols[c]` list the
    /// global indices touched by cell `c`.
    pub fn from_cell_pattern(nrows: usize, ncols: usize, cell_rows: &[Vec<usize>], cell_cols: &[Vec<usize>]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for rows in cell_rows {
            for &r in rows {
                counts[r + 1] += 1;
            }
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut row_cells = vec![0usize; counts[nrows]];
        for (c, rows) in cell_rows.iter().enumerate() {
            for &r in rows {
                row_cells[next[r]] = c;
                next[r] += 1;
            }
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        let mut buf = Vec::new();
        for r in 0..nrows {
            buf.clear();
            for &c in &row_cells[counts[r]..counts[r + 1]] {
                buf.extend_from_slice(&cell_cols[c]);
            }
            buf.sort_unstable();
            buf.dedup();
            assert!(buf.last().is_none_or(|&c| c < ncols));
            col_idx.extend_from_slice(&buf);
            row_ptr.push(col_idx.len());
        }
        let vals = vec![0.0; col_idx.len()];
        Self { nrows, ncols, row_ptr, col_idx, vals }
    }

    /// Add a dense row-major block at `(rows, cols)`; every entry must be
    /// in the pattern.
    pub fn add_local(&mut self, rows: &[usize], cols: &[usize], block: &[f64]) {
        let nc = cols.len();
        for (i, &r) in rows.iter().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let idx = &self.col_idx[a..b];
            for (j, &c) in cols.iter().enumerate() {
                let v = block[i * nc + j];
                if v != 0.0 {
                    let p = idx.binary_search(&c).expect("entry outside the assembled pattern");
                    self.vals[a + p] += v;
                }
            }
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.col_idx[a..b].binary_search(&c) {
            Ok(p) => self.vals[a + p],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let mut s = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.vals[p] * x[self.col_idx[p]];
            }
            *yr = s;
        }
    }

    /// `y = Aᵀ x`.
    pub fn mul_t_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, xr) in x.iter().enumerate() {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[p]] += self.vals[p] * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        self.transpose_filtered(|_, _| true)
    }

    /// Transpose of the entries with `keep(row, col)`; rows of the result
    /// stay sorted because source rows are visited in order.
    fn transpose_filtered(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        let mut row_ptr = vec![0usize; self.ncols + 1];
        for r in 0..self.nrows {
            for (c, _) in self.row(r) {
                if keep(r, c) {
                    row_ptr[c + 1] += 1;
                }
            }
        }
        for i in 0..self.ncols {
            row_ptr[i + 1] += row_ptr[i];
        }
        let nnz = row_ptr[self.ncols];
        let mut next = row_ptr.clone();
        let mut col_idx = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                if keep(r, c) {
                    col_idx[next[c]] = r;
                    vals[next[c]] = v;
                    next[c] += 1;
                }
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, vals }
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= a;
        }
        out
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(r, c, v)| (v - self.get(c, r)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Assemble the block matrix `[[a, b], [c, d]]`; missing blocks are zero.
    pub fn block(
        a: Option<&CsrMatrix>,
        b: Option<&CsrMatrix>,
        c: Option<&CsrMatrix>,
        d: Option<&CsrMatrix>,
        n0: usize,
        n1: usize,
    ) -> Self {
        let mut t = Vec::new();
        let mut push = |m: Option<&CsrMatrix>, ro: usize, co: usize| {
            if let Some(m) = m {
                t.extend(m.triplets().map(|(r, c, v)| (r + ro, c + co, v)));
            }
        };
        push(a, 0, 0);
        push(b, 0, n0);
        push(c, n0, 0);
        push(d, n0, n0);
        Self::from_triplets(n0 + n1, n0 + n1, &t)
    }

    /// Column-compressed copy (the CSR arrays of the transpose).
    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        Self::faer_from_transpose(self.transpose())
    }

    /// Column-compressed copy of the lower triangle, enough for a Cholesky
    /// factorisation of a symmetric matrix.
    pub fn to_faer_lower(&self) -> SparseColMat<usize, f64> {
        Self::faer_from_transpose(self.transpose_filtered(|r, c| r >= c))
    }

    fn faer_from_transpose(t: CsrMatrix) -> SparseColMat<usize, f64> {
        let sym = SymbolicSparseColMat::new_checked(t.ncols, t.nrows, t.row_ptr, None, t.col_idx);
        SparseColMat::new(sym, t.vals)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] += v;
        }
        m
    }

    /// Coordinate text: a `rows cols nnz` header, then `row col value` lines.
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.triplets() {
            let _ = writeln!(s, "{r} {c} {v:.17e}");
        }
        s
    }

    pub fn export_coordinate(&self, path: impl AsRef<Path>) -> io::Result<()> {
        std::fs::write(path, self.to_coordinate_text())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (1, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(0, 2), 4.0);
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![6.0, -1.0]);
        assert_eq!(m.mul_t_vec(&[1.0, 2.0]), vec![2.0, -2.0, 4.0]);
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn block_and_dense_agree() {
        let a = CsrMatrix::identity(2);
        let b = CsrMatrix::from_triplets(2, 1, &[(1, 0, 5.0)]);
        let k = CsrMatrix::block(Some(&a), Some(&b), Some(&b.transpose()), None, 2, 1);
        let d = k.to_dense();
        assert_eq!(d[(1, 2)], 5.0);
        assert_eq!(d[(2, 1)], 5.0);
        assert_eq!(k.asymmetry(), 0.0);
        assert_eq!(k.to_coordinate_text().lines().count(), 1 + k.nnz());
    }

    #[test]
    fn faer_copies_match() {
        let m = CsrMatrix::from_triplets(3, 3, &[(0, 0, 4.0), (1, 0, 1.0), (0, 1, 1.0), (2, 2, 2.0), (1, 1, 3.0)]);
        let f = m.to_faer();
        let mut dense = [[0.0; 3]; 3];
        for t in f.triplet_iter() {
            dense[t.row][t.col] += *t.val;
        }
        for (r, c, v) in m.triplets() {
            assert_eq!(dense[r][c], v);
        }
        let l = m.to_faer_lower();
        assert_eq!(l.triplet_iter().count(), 4);
        assert!(l.triplet_iter().all(|t| t.row >= t.col));
    }

    #[test]
    fn cell_pattern_scatter() {
        let cells = vec![vec![0, 1], vec![1, 2]];
        let mut m = CsrMatrix::from_cell_pattern(3, 3, &cells, &cells);
        assert_eq!(m.nnz(), 7);
        m.add_local(&[0, 1], &[0, 1], &[1.0, 2.0, 3.0, 4.0]);
        m.add_local(&[1, 2], &[1, 2], &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(m.get(1, 1), 5.0);
        assert_eq!(m.get(0, 2), 0.0);
    }
}
