//! Direct Cholesky solvers for the coarsest level and the two-grid coarse
//! problem.

use crate::accel::Preconditioner;
use crate::error::{check_dim, Error, Result};
use crate::sparse::SparseMatrix;

/// Dense Cholesky factor `A = L Lᵀ`, used on the coarsest level.
#[derive(Debug, Clone)]
pub struct DenseCholesky {
    n: usize,
    // Row-major lower triangle.
    l: Vec<f64>,
}

impl DenseCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        check_dim(a.n_rows(), a.n_cols())?;
        let n = a.n_rows();
        let mut l = a.to_dense();
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                l[i * n + j] = 0.0;
            }
        }
        Ok(Self { n, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, b.len())?;
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * y[k];
            }
            y[i] = s / self.l[i * n + i];
        }
        Ok(y)
    }
}

impl Preconditioner for DenseCholesky {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.solve(r)
    }
}

/// Exact solve of an SPD system through dense Cholesky of the densified matrix.
pub fn coarsest_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    DenseCholesky::factor(a)?.solve(b)
}

/// Envelope (profile) Cholesky factor for banded-ish SPD matrices.
///
/// Row `i` of the factor is stored densely from its first nonzero column up
/// to the diagonal; fill stays inside the envelope of `A`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    first: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        check_dim(a.n_rows(), a.n_cols())?;
        let n = a.n_rows();
        let mut first = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0usize);
        for i in 0..n {
            let (cols, _) = a.row(i);
            let f = cols.first().copied().unwrap_or(i).min(i);
            first.push(f);
            offsets.push(offsets[i] + (i - f + 1));
        }
        let mut data = vec![0.0; offsets[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j <= i {
                    data[offsets[i] + j - first[i]] = v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let base_i = offsets[i];
            for j in fi..=i {
                let fj = first[j];
                let base_j = offsets[j];
                let lo = fi.max(fj);
                let mut s = data[base_i + j - fi];
                let ri = &data[base_i + lo - fi..base_i + j - fi];
                let rj = &data[base_j + lo - fj..base_j + j - fj];
                s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                if j < i {
                    data[base_i + j - fi] = s / data[base_j + j - fj];
                } else {
                    if !(s > 0.0) {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    data[base_i + i - fi] = s.sqrt();
                }
            }
        }
        Ok(Self {
            n,
            first,
            offsets,
            data,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, b.len())?;
        let mut y = b.to_vec();
        for i in 0..self.n {
            let fi = self.first[i];
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.offsets[i]..self.offsets[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, l) in (fi..i).zip(&row[..i - fi]) {
                y[k] -= l * yi;
            }
        }
        Ok(y)
    }

    /// Number of stored factor entries.
    pub fn envelope_size(&self) -> usize {
        self.data.len()
    }
}

impl Preconditioner for EnvelopeCholesky {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.solve(r)
    }
}
