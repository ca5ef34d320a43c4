//! Coarse-level inner solvers.
//!
//! Every solver here approximates `A⁻¹ b` with `k` applications of a
//! preconditioner `B`, starting from `x⁰ = 0`. Chebyshev, heavy-ball and
//! Nesterov iterations are linear in `b` for a fixed linear `B` (up to the
//! steepest-descent first step); the flexible conjugate gradient used by
//! the K-cycle is not.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::poly;
use crate::sparse::{axpy, dot, norm2, SparseMatrix};

/// Application of a preconditioner `r -> B r`.
pub trait Preconditioner {
    fn dim(&self) -> usize;
    fn apply(&self, r: &[f64]) -> Result<Vec<f64>>;
}

impl<P: Preconditioner + ?Sized> Preconditioner for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        (**self).apply(r)
    }
}

/// A sparse matrix acting as an explicit preconditioner.
impl Preconditioner for SparseMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.spmv(r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IdentityPreconditioner(pub usize);

impl Preconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.0, r.len())?;
        Ok(r.to_vec())
    }
}

/// Interval `[lambda_min, lambda_max]` assumed to contain the spectrum of `BA`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SpectralBounds {
    pub fn new(lambda_min: f64, lambda_max: f64) -> Result<Self> {
        if !(lambda_max > 0.0) || !(lambda_min >= 0.0) || lambda_min > lambda_max {
            return Err(Error::InvalidArgument(format!(
                "invalid spectral bounds [{lambda_min}, {lambda_max}]"
            )));
        }
        Ok(Self {
            lambda_min,
            lambda_max,
        })
    }

    /// `lambda_max / lambda_min`; infinite when `lambda_min = 0`.
    pub fn condition_number(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.lambda_min, self.lambda_max).map(|_| ())
    }

    /// Heavy-ball step and momentum `(α, β)`.
    pub fn heavy_ball_parameters(&self) -> (f64, f64) {
        let (l, mu) = (self.lambda_max.sqrt(), self.lambda_min.sqrt());
        let alpha = 4.0 / ((l + mu) * (l + mu));
        let ratio = (l - mu) / (l + mu);
        (alpha, ratio * ratio)
    }

    /// Nesterov momentum `β`.
    pub fn nesterov_momentum(&self) -> f64 {
        let (l, mu) = (self.lambda_max.sqrt(), self.lambda_min.sqrt());
        (l - mu) / (l + mu)
    }
}

impl Default for SpectralBounds {
    fn default() -> Self {
        Self {
            lambda_min: 0.0,
            lambda_max: 1.0,
        }
    }
}

impl fmt::Display for SpectralBounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.lambda_min, self.lambda_max)
    }
}

/// How the momentum methods produce `x¹` from `x⁰ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialStep {
    /// Exact line search along `Bb`: `x¹ = (b, Bb) / (A Bb, Bb) · Bb`.
    #[default]
    SteepestDescent,
    /// The `b`-independent first step that matches the family's error
    /// polynomial `p₁`: `q₀ Bb` for heavy ball, `Bb / λmax` for Nesterov.
    Polynomial,
    /// `x¹ = Bb`, the Chebyshev starting step (`p₁(x) = 1 - x`).
    Preconditioned,
}

/// Sign inside the second bracket of the Nesterov update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NesterovForm {
    /// `x^i = (1+β)[x^{i-1} + B r^{i-1}/L] - β[x^{i-2} + B r^{i-2}/L]`,
    /// obtained by eliminating `y` from the two-sequence method.
    #[default]
    Consistent,
    /// The same update with `-` in the second bracket.
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MomentumOptions {
    pub init: InitialStep,
    pub nesterov_form: NesterovForm,
}

impl FromStr for InitialStep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sd" | "steepest-descent" => Ok(Self::SteepestDescent),
            "poly" | "polynomial" => Ok(Self::Polynomial),
            "bb" | "preconditioned" => Ok(Self::Preconditioned),
            _ => Err(Error::InvalidArgument(format!("unknown initial step '{s}'"))),
        }
    }
}

fn check_operands(a: &SparseMatrix, b_op: &dyn Preconditioner, rhs: &[f64], k: usize) -> Result<()> {
    check_dim(a.n_rows(), a.n_cols())?;
    check_dim(a.n_rows(), b_op.dim())?;
    check_dim(a.n_rows(), rhs.len())?;
    if k == 0 {
        return Err(Error::InvalidArgument("inner step count k must be at least 1".into()));
    }
    Ok(())
}

/// One steepest-descent step from zero; returns `(x¹, Bb)`.
fn steepest_descent(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    rhs: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let bb = b_op.apply(rhs)?;
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok((vec![0.0; rhs.len()], bb));
    }
    let abb = a.spmv(&bb)?;
    let curvature = dot(&abb, &bb);
    if !(curvature > 0.0) {
        return Err(Error::NonPositiveCurvature(curvature));
    }
    let step = dot(rhs, &bb) / curvature;
    let x = bb.iter().map(|v| step * v).collect();
    Ok((x, bb))
}

/// `x¹ = α Bb` with `α = (b, Bb) / (A Bb, Bb)`; zero for `b = 0`.
pub fn steepest_descent_init(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    check_operands(a, b_op, rhs, 1)?;
    steepest_descent(a, b_op, rhs).map(|(x, _)| x)
}

/// `k` steps of the Chebyshev semi-iterative method with `ρ = 1 - λmin/λmax`,
/// starting from `x¹ = Bb`.
pub fn chebyshev_apply(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    rhs: &[f64],
    k: usize,
    bounds: SpectralBounds,
) -> Result<Vec<f64>> {
    check_operands(a, b_op, rhs, k)?;
    bounds.validate()?;
    let rho = 1.0 - bounds.lambda_min / bounds.lambda_max;
    let mut prev = vec![0.0; rhs.len()];
    let mut x = b_op.apply(rhs)?;
    for j in 1..k {
        let r = a.residual(rhs, &x)?;
        let z = b_op.apply(&r)?;
        // ρ = 0 is the limit ω → 1 (plain preconditioned Richardson).
        let omega = if rho == 0.0 {
            1.0
        } else {
            let t = 1.0 / rho;
            2.0 * poly::cheb_t(j, t) / (rho * poly::cheb_t(j + 1, t))
        };
        let next: Vec<f64> = x
            .iter()
            .zip(&z)
            .zip(&prev)
            .map(|((xi, zi), pi)| omega * (xi + zi - pi) + pi)
            .collect();
        prev = std::mem::replace(&mut x, next);
    }
    Ok(x)
}

fn first_iterate(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    rhs: &[f64],
    init: InitialStep,
    polynomial_scale: impl FnOnce() -> Result<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    match init {
        InitialStep::SteepestDescent => steepest_descent(a, b_op, rhs),
        InitialStep::Polynomial | InitialStep::Preconditioned => {
            let scale = match init {
                InitialStep::Polynomial => polynomial_scale()?,
                _ => 1.0,
            };
            let bb = b_op.apply(rhs)?;
            Ok((bb.iter().map(|v| scale * v).collect(), bb))
        }
    }
}

/// `k` heavy-ball steps: `x^i = x^{i-1} + α B r^{i-1} + β (x^{i-1} - x^{i-2})`.
///
/// `lambda_min = 0` is allowed (`α = 4/λmax`, `β = 1`); the iteration may
/// then diverge.
pub fn heavy_ball_apply(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    rhs: &[f64],
    k: usize,
    bounds: SpectralBounds,
    options: MomentumOptions,
) -> Result<Vec<f64>> {
    check_operands(a, b_op, rhs, k)?;
    bounds.validate()?;
    let (alpha, beta) = bounds.heavy_ball_parameters();
    let (mut x, _) = first_iterate(a, b_op, rhs, options.init, || {
        poly::hb_q0(bounds)
    })?;
    let mut prev = vec![0.0; rhs.len()];
    for _ in 1..k {
        let r = a.residual(rhs, &x)?;
        let z = b_op.apply(&r)?;
        let next: Vec<f64> = x
            .iter()
            .zip(&z)
            .zip(&prev)
            .map(|((xi, zi), pi)| xi + alpha * zi + beta * (xi - pi))
            .collect();
        prev = std::mem::replace(&mut x, next);
    }
    Ok(x)
}

/// `k` Nesterov steps with step `1/λmax` and momentum
/// `β = (√λmax - √λmin)/(√λmax + √λmin)`.
pub fn nesterov_apply(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    rhs: &[f64],
    k: usize,
    bounds: SpectralBounds,
    options: MomentumOptions,
) -> Result<Vec<f64>> {
    check_operands(a, b_op, rhs, k)?;
    bounds.validate()?;
    let inv_l = 1.0 / bounds.lambda_max;
    let beta = bounds.nesterov_momentum();
    let sign = match options.nesterov_form {
        NesterovForm::Consistent => 1.0,
        NesterovForm::Printed => -1.0,
    };
    let (mut x, bb) = first_iterate(a, b_op, rhs, options.init, || Ok(inv_l))?;
    // Gradient-step image of x⁰ = 0.
    let mut prev_step: Vec<f64> = bb.iter().map(|v| sign * inv_l * v).collect();
    for _ in 1..k {
        let r = a.residual(rhs, &x)?;
        let z = b_op.apply(&r)?;
        let mut next = Vec::with_capacity(x.len());
        let mut step = Vec::with_capacity(x.len());
        for ((xi, zi), si) in x.iter().zip(&z).zip(&prev_step) {
            next.push((1.0 + beta) * (xi + inv_l * zi) - beta * si);
            step.push(xi + sign * inv_l * zi);
        }
        prev_step = step;
        x = next;
    }
    Ok(x)
}

/// `k` steps of flexible preconditioned conjugate gradients from zero.
///
/// Each new direction is `B r` made `A`-orthogonal to every previous
/// direction; the step length is the exact line search.
pub fn npcg_apply(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    rhs: &[f64],
    k: usize,
) -> Result<Vec<f64>> {
    check_operands(a, b_op, rhs, k)?;
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut dirs: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::with_capacity(k);
    for _ in 0..k {
        if norm2(&r) == 0.0 {
            break;
        }
        let mut d = b_op.apply(&r)?;
        for (pd, apd, curv) in &dirs {
            let c = dot(&d, apd) / curv;
            axpy(-c, pd, &mut d);
        }
        let ad = a.spmv(&d)?;
        let curvature = dot(&d, &ad);
        if !(curvature > 0.0) {
            if norm2(&d) == 0.0 {
                break;
            }
            return Err(Error::NonPositiveCurvature(curvature));
        }
        let step = dot(&r, &d) / curvature;
        axpy(step, &d, &mut x);
        axpy(-step, &ad, &mut r);
        dirs.push((d, ad, curvature));
    }
    Ok(x)
}
