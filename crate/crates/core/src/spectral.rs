//! Extreme eigenvalue estimates of `BA` from the preconditioned conjugate
//! gradient recurrence.
//!
//! `BA` is self-adjoint in the `B⁻¹` inner product, so the PCG step lengths
//! `α_j` and `β_j` define the Lanczos tridiagonal matrix
//!
//! ```text
//! T_00 = 1/α_0,  T_jj = 1/α_j + β_{j-1}/α_{j-1},  T_{j,j+1} = √β_j / α_j
//! ```
//!
//! whose eigenvalues (Ritz values) approximate the spectrum of `BA` from
//! inside.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::accel::{Preconditioner, SpectralBounds};
use crate::error::{check_dim, Error, Result};
use crate::sparse::{axpy, dot, SparseMatrix};

pub const DEFAULT_LANCZOS_STEPS: usize = 20;
/// Factor applied to the smallest Ritz value.
pub const LAMBDA_MIN_SAFETY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RitzEstimate {
    pub lambda_min_est: f64,
    pub lambda_max_est: f64,
    pub steps_used: usize,
}

impl RitzEstimate {
    pub fn bounds(&self) -> SpectralBounds {
        SpectralBounds {
            lambda_min: self.lambda_min_est,
            lambda_max: self.lambda_max_est,
        }
    }
}

/// Ritz values of `BA` after at most `steps` PCG-Lanczos steps from a
/// seeded random right-hand side, in ascending order.
///
/// Stops early when the preconditioned residual vanishes.
pub fn ritz_values(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let n = a.n_rows();
    check_dim(n, a.n_cols())?;
    check_dim(n, b_op.dim())?;
    if steps == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "Lanczos needs at least one step and a non-empty matrix".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut z = b_op.apply(&r)?;
    let mut rz = dot(&r, &z);
    let rz0 = rz;
    let mut p = z.clone();
    let mut alphas = Vec::with_capacity(steps);
    let mut betas = Vec::with_capacity(steps);
    for _ in 0..steps.min(n) {
        if !(rz > 1e-28 * rz0) {
            break;
        }
        let ap = a.spmv(&p)?;
        let curvature = dot(&p, &ap);
        if !(curvature > 0.0) {
            return Err(Error::NonPositiveCurvature(curvature));
        }
        let alpha = rz / curvature;
        alphas.push(alpha);
        axpy(-alpha, &ap, &mut r);
        z = b_op.apply(&r)?;
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        betas.push(beta);
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        rz = rz_next;
    }
    let m = alphas.len();
    if m == 0 {
        return Err(Error::InvalidArgument(
            "preconditioned start vector is zero".into(),
        ));
    }
    let mut t = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        t[(j, j)] = 1.0 / alphas[j] + if j > 0 { betas[j - 1] / alphas[j - 1] } else { 0.0 };
        if j + 1 < m {
            let off = betas[j].max(0.0).sqrt() / alphas[j];
            t[(j, j + 1)] = off;
            t[(j + 1, j)] = off;
        }
    }
    let mut ritz: Vec<f64> = SymmetricEigen::new(t).eigenvalues.iter().copied().collect();
    ritz.sort_by(f64::total_cmp);
    Ok(ritz)
}

/// Safeguarded bounds: smallest Ritz value times [`LAMBDA_MIN_SAFETY`],
/// largest Ritz value raised to at least 1.
pub fn estimate_bounds(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    steps: usize,
    seed: u64,
) -> Result<RitzEstimate> {
    let ritz = ritz_values(a, b_op, steps, seed)?;
    let (lo, hi) = (ritz[0], ritz[ritz.len() - 1]);
    if !(lo > 0.0) || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "preconditioned operator is not positive definite (Ritz values {lo}, {hi})"
        )));
    }
    Ok(RitzEstimate {
        lambda_min_est: LAMBDA_MIN_SAFETY * lo,
        lambda_max_est: hi.max(1.0),
        steps_used: ritz.len(),
    })
}
