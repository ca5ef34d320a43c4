//! Gauss-Seidel sweeps in CSR row order.
//!
//! With `x = 0` on entry, [`gs_forward`] computes `M b` for
//! `M = (D + L)⁻¹`; [`gs_backward`] applied to any `x` computes
//! `x + Mᵀ (b - A x)` when `A` is symmetric.

use crate::error::{check_dim, Error, Result};
use crate::sparse::SparseMatrix;

fn check(a: &SparseMatrix, b: &[f64], x: &[f64]) -> Result<()> {
    check_dim(a.n_rows(), a.n_cols())?;
    check_dim(a.n_rows(), b.len())?;
    check_dim(a.n_rows(), x.len())
}

#[inline]
fn relax_row(a: &SparseMatrix, b: &[f64], x: &mut [f64], i: usize) -> Result<()> {
    let (cols, vals) = a.row(i);
    let mut diag = 0.0;
    let mut s = b[i];
    for (&j, &v) in cols.iter().zip(vals) {
        if j == i {
            diag = v;
        } else {
            s -= v * x[j];
        }
    }
    if !(diag > 0.0) {
        return Err(Error::NonPositiveDiagonal { row: i, value: diag });
    }
    x[i] = s / diag;
    Ok(())
}

/// One forward sweep, rows `0, 1, ..., n-1`.
pub fn gs_forward(a: &SparseMatrix, b: &[f64], x: &mut [f64]) -> Result<()> {
    check(a, b, x)?;
    for i in 0..a.n_rows() {
        relax_row(a, b, x, i)?;
    }
    Ok(())
}

/// One backward sweep, rows `n-1, ..., 0`.
pub fn gs_backward(a: &SparseMatrix, b: &[f64], x: &mut [f64]) -> Result<()> {
    check(a, b, x)?;
    for i in (0..a.n_rows()).rev() {
        relax_row(a, b, x, i)?;
    }
    Ok(())
}
