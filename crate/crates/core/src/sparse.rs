//! Compressed sparse row storage and the kernels the multigrid code runs on.
//!
//! Matrices are canonical on construction: column indices within a row are
//! strictly increasing and duplicates are summed. Kernels never mutate a
//! matrix, so a `SparseMatrix` can be shared freely between solves.

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a canonical matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate entries are summed in the order they appear, so assembling
    /// a symmetric element matrix entry-by-entry yields bitwise symmetric
    /// sums.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::InvalidArgument(format!(
                    "entry ({i}, {j}) outside {n_rows}x{n_cols} matrix"
                )));
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));

        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &t in &order {
            let (i, j, v) = triplets[t];
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Wraps raw CSR arrays after checking they are canonical.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 || row_offsets[0] != 0 {
            return Err(Error::InvalidArgument("malformed row offsets".into()));
        }
        if col_indices.len() != values.len() || row_offsets[n_rows] != values.len() {
            return Err(Error::InvalidArgument(
                "row offsets disagree with entry count".into(),
            ));
        }
        for i in 0..n_rows {
            if row_offsets[i] > row_offsets[i + 1] {
                return Err(Error::InvalidArgument(format!(
                    "row offsets decrease at row {i}"
                )));
            }
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "row {i} is not sorted and duplicate free"
                )));
            }
            if cols.last().is_some_and(|&c| c >= n_cols) {
                return Err(Error::InvalidArgument(format!(
                    "column index out of range in row {i}"
                )));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from row-major dense data, dropping exact zeros.
    pub fn from_dense(n_rows: usize, n_cols: usize, data: &[f64]) -> Result<Self> {
        check_dim(n_rows * n_cols, data.len())?;
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..n_rows {
            for j in 0..n_cols {
                let v = data[i * n_cols + j];
                if v != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(values.len());
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
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
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    /// Stored value at `(i, j)`, zero when absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_dim(self.n_cols, x.len())?;
        check_dim(self.n_rows, y.len())?;
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
        Ok(())
    }

    /// `y = Aᵀ x` without forming the transpose.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_rows, x.len())?;
        let mut y = vec![0.0; self.n_cols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * xi;
            }
        }
        Ok(y)
    }

    /// `b - A x`.
    pub fn residual(&self, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n_rows, b.len())?;
        let mut r = self.spmv(x)?;
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        Ok(r)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                col_indices[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Sparse product `self * other` (row-by-row Gustavson accumulation).
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        check_dim(self.n_cols, other.n_rows)?;
        let mut row_offsets = Vec::with_capacity(self.n_rows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; other.n_cols];
        let mut marker = vec![usize::MAX; other.n_cols];
        let mut touched = Vec::new();
        row_offsets.push(0);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&j, &b) in ocols.iter().zip(ovals) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_indices.push(j);
                values.push(acc[j]);
            }
            touched.clear();
            row_offsets.push(values.len());
        }
        Ok(SparseMatrix {
            n_rows: self.n_rows,
            n_cols: other.n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Galerkin coarse operator `Pᵀ A P`.
    ///
    /// The strictly upper triangle is computed and mirrored, so the result is
    /// bitwise symmetric.
    pub fn triple_product(p: &SparseMatrix, a: &SparseMatrix) -> Result<SparseMatrix> {
        check_dim(a.n_cols, p.n_rows)?;
        check_dim(a.n_rows, a.n_cols)?;
        let ap = a.matmul(p)?;
        let full = p.transpose().matmul(&ap)?;
        let n = full.n_rows;
        let mut triplets = Vec::with_capacity(full.nnz());
        for i in 0..n {
            let (cols, vals) = full.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j >= i {
                    triplets.push((i, j, v));
                    if j > i {
                        triplets.push((j, i, v));
                    }
                }
            }
        }
        SparseMatrix::from_triplets(n, n, &triplets)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n_rows * self.n_cols];
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                dense[i * self.n_cols + j] = v;
            }
        }
        dense
    }

    /// True when the matrix is square and `a_ij == a_ji` bitwise for every entry.
    pub fn is_symmetric(&self) -> bool {
        if self.n_rows != self.n_cols {
            return false;
        }
        (0..self.n_rows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .all(|(&j, &v)| self.get(j, i).to_bits() == v.to_bits())
        })
    }

    /// Largest `|a_ij - a_ji|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j < self.n_rows {
                    worst = worst.max((v - self.get(j, i)).abs());
                }
            }
        }
        worst
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}
