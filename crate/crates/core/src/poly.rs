//! Error polynomials of the semi-iterative coarse solvers, the convergence
//! bound factors of the momentum methods and the two-grid threshold
//! equations of the H- and N-cycles.
//!
//! For a family with error polynomial `p_k`, `p_k(x) = 1 - x q_{k-1}(x)`,
//! where `q_{k-1}` is the polynomial approximation of `1/x` the solver
//! applies to `BA`.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::accel::SpectralBounds;
use crate::error::{Error, Result};

/// Chebyshev polynomial `C_k(t)` via `C_k = 2t C_{k-1} - C_{k-2}`.
pub fn cheb_t(k: usize, t: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, t);
    if k == 0 {
        return prev;
    }
    for _ in 1..k {
        let next = 2.0 * t * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Chebyshev,
    HeavyBall,
    Nesterov,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Chebyshev, Family::HeavyBall, Family::Nesterov];

    pub fn name(self) -> &'static str {
        match self {
            Family::Chebyshev => "cheb",
            Family::HeavyBall => "hb",
            Family::Nesterov => "na",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cheb" | "chebyshev" => Ok(Family::Chebyshev),
            "hb" | "heavy-ball" => Ok(Family::HeavyBall),
            "na" | "nesterov" => Ok(Family::Nesterov),
            other => Err(Error::InvalidArgument(format!("unknown family '{other}'"))),
        }
    }
}

/// `q₀ = 1/(2λmax) + 1/(2λmin)`, the constant heavy-ball starting polynomial.
pub fn hb_q0(bounds: SpectralBounds) -> Result<f64> {
    if !(bounds.lambda_min > 0.0) {
        return Err(Error::UndefinedPolynomial(
            "heavy-ball polynomials need lambda_min > 0",
        ));
    }
    Ok(0.5 / bounds.lambda_max + 0.5 / bounds.lambda_min)
}

/// Chebyshev weight `ω_j = 2 C_j(1/ρ) / (ρ C_{j+1}(1/ρ))`, `ρ = 1 - λmin/λmax`.
fn cheb_omega(j: usize, bounds: SpectralBounds) -> f64 {
    let rho = 1.0 - bounds.lambda_min / bounds.lambda_max;
    if rho == 0.0 {
        return 1.0;
    }
    let t = 1.0 / rho;
    2.0 * cheb_t(j, t) / (rho * cheb_t(j + 1, t))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialSpec {
    pub family: Family,
    pub k: usize,
    pub bounds: SpectralBounds,
}

impl PolynomialSpec {
    pub fn new(family: Family, k: usize, bounds: SpectralBounds) -> Result<Self> {
        let bounds = SpectralBounds::new(bounds.lambda_min, bounds.lambda_max)?;
        if family == Family::HeavyBall {
            hb_q0(bounds)?;
        }
        Ok(Self { family, k, bounds })
    }

    /// Error polynomial `p_k(x)`.
    pub fn p_eval(&self, x: f64) -> Result<f64> {
        if self.k == 0 {
            return Ok(1.0);
        }
        let b = self.bounds;
        let (mut prev, mut cur) = match self.family {
            Family::Chebyshev => (1.0, 1.0 - x),
            Family::HeavyBall => (1.0, 1.0 - x * hb_q0(b)?),
            Family::Nesterov => (1.0, 1.0 - x / b.lambda_max),
        };
        for j in 1..self.k {
            let next = match self.family {
                Family::Chebyshev => {
                    let w = cheb_omega(j, b);
                    w * ((1.0 - x) * cur - prev) + prev
                }
                Family::HeavyBall => {
                    let (alpha, beta) = b.heavy_ball_parameters();
                    (1.0 - alpha * x) * cur + beta * (cur - prev)
                }
                Family::Nesterov => {
                    let beta = b.nesterov_momentum();
                    let damp = 1.0 - x / b.lambda_max;
                    (1.0 + beta) * damp * cur - beta * damp * prev
                }
            };
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    /// `q_k(x)`, the approximation of `1/x` with `p_{k+1}(x) = 1 - x q_k(x)`.
    pub fn q_eval(&self, x: f64) -> Result<f64> {
        let b = self.bounds;
        // q_{-1} = 0 corresponds to p_0 = 1.
        let mut prev = 0.0;
        let mut cur = match self.family {
            Family::Chebyshev => 1.0,
            Family::HeavyBall => hb_q0(b)?,
            Family::Nesterov => 1.0 / b.lambda_max,
        };
        for j in 0..self.k {
            let next = match self.family {
                Family::Chebyshev => {
                    let w = cheb_omega(j + 1, b);
                    w + w * (1.0 - x) * cur + (1.0 - w) * prev
                }
                Family::HeavyBall => {
                    let (alpha, beta) = b.heavy_ball_parameters();
                    cur + alpha * (1.0 - x * cur) + beta * (cur - prev)
                }
                Family::Nesterov => {
                    let beta = b.nesterov_momentum();
                    let inv_l = 1.0 / b.lambda_max;
                    cur + inv_l * (1.0 - x * cur) + beta * (1.0 - x * inv_l) * (cur - prev)
                }
            };
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }
}

/// Evenly spaced points `lo, lo + step, ...` up to `hi` (inclusive within
/// rounding).
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) {
        return Err(Error::InvalidArgument(format!(
            "bad grid [{lo}, {hi}] with step {step}"
        )));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

/// `(x, p_k(x))` samples over `grid`.
pub fn curve_data(spec: &PolynomialSpec, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    grid.iter().map(|&x| Ok((x, spec.p_eval(x)?))).collect()
}

/// CSV with columns `x,p_cheb,p_hb,p_na` for degree `k`. Families whose
/// polynomial is undefined on `bounds` get empty cells.
pub fn curves_csv(k: usize, bounds: SpectralBounds, grid: &[f64]) -> Result<String> {
    let specs: Vec<Option<PolynomialSpec>> = Family::ALL
        .iter()
        .map(|&f| PolynomialSpec::new(f, k, bounds).ok())
        .collect();
    if specs.iter().all(Option::is_none) {
        return Err(Error::InvalidArgument(format!("invalid bounds {bounds}")));
    }
    let mut out = String::from("x,p_cheb,p_hb,p_na\n");
    for &x in grid {
        let _ = write!(out, "{x:.6}");
        for spec in &specs {
            match spec {
                Some(s) => {
                    let _ = write!(out, ",{:.12e}", s.p_eval(x)?);
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn check_kappa(kappa: f64, k: usize) -> Result<()> {
    if !(kappa >= 1.0) || !kappa.is_finite() || k == 0 {
        return Err(Error::InvalidArgument(format!(
            "bound needs finite kappa >= 1 and k >= 1, got kappa = {kappa}, k = {k}"
        )));
    }
    Ok(())
}

/// Heavy-ball factor `((κ-1)/2) ((√κ-1)/(√κ+1))^{k-1}` on the `A`-norm error.
pub fn hb_bound(kappa: f64, k: usize) -> Result<f64> {
    check_kappa(kappa, k)?;
    let s = kappa.sqrt();
    Ok(0.5 * (kappa - 1.0) * ((s - 1.0) / (s + 1.0)).powi(k as i32 - 1))
}

/// Nesterov factor `2 (1 - 1/√κ)^k` on the squared `A`-norm error.
pub fn na_bound(kappa: f64, k: usize) -> Result<f64> {
    check_kappa(kappa, k)?;
    Ok(2.0 * (1.0 - 1.0 / kappa.sqrt()).powi(k as i32))
}

/// Which cycle's uniform-convergence inequality to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdFamily {
    /// H-cycle.
    HeavyBall,
    /// N-cycle with coarse-solver factor `√2 (1 - √(1-δ))^k`; for `k = 2`
    /// the threshold is exactly `1/√2`.
    Nesterov,
    /// N-cycle with coarse-solver factor `√(2 (1 - √(1-δ))^k)`.
    NesterovSqrt,
}

impl FromStr for ThresholdFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" | "hb" => Ok(Self::HeavyBall),
            "n" | "na" => Ok(Self::Nesterov),
            "n-sqrt" | "na-sqrt" => Ok(Self::NesterovSqrt),
            other => Err(Error::InvalidArgument(format!(
                "unknown threshold family '{other}'"
            ))),
        }
    }
}

impl fmt::Display for ThresholdFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::HeavyBall => "H",
            Self::Nesterov => "N",
            Self::NesterovSqrt => "N-sqrt",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdResult {
    /// Cycle convergence factor at which the bound is attained.
    pub delta: f64,
    /// Largest two-grid convergence factor the bound tolerates.
    pub delta_tg: f64,
    pub k: usize,
    /// `|f(delta) - (1 - delta_tg)|` for the defining function `f`.
    pub residual: f64,
}

impl ThresholdFamily {
    /// Whether `δ` satisfies the side condition of the bound.
    pub fn admissible(self, k: usize, delta: f64) -> bool {
        if !(0.0..1.0).contains(&delta) {
            return false;
        }
        let s = (1.0 - delta).sqrt();
        let a = (1.0 - s).powi(k as i32 - 1);
        match self {
            Self::HeavyBall => {
                let c = (1.0 + s).powi(k as i32 - 1);
                2.0 * (1.0 - delta) * c - delta * a > 0.0
            }
            Self::Nesterov | Self::NesterovSqrt => 2.0 * (1.0 - s).powi(k as i32) < 1.0,
        }
    }

    /// Left-hand side `f(δ)` of `f(δ) = 1/κ_TG`; a two-grid factor
    /// `δ_TG` is covered when `1 - δ_TG >= f(δ)` for some admissible `δ`.
    pub fn lhs(self, k: usize, delta: f64) -> f64 {
        let s = (1.0 - delta).sqrt();
        let a = (1.0 - s).powi(k as i32 - 1);
        match self {
            Self::HeavyBall => {
                let c = (1.0 + s).powi(k as i32 - 1);
                (1.0 - delta) + delta * (1.0 - delta) * a / (2.0 * (1.0 - delta) * c - delta * a)
            }
            Self::Nesterov | Self::NesterovSqrt => {
                let g = if self == Self::Nesterov {
                    std::f64::consts::SQRT_2 * (1.0 - s).powi(k as i32)
                } else {
                    (2.0 * (1.0 - s).powi(k as i32)).sqrt()
                };
                (1.0 - delta) / (1.0 - g)
            }
        }
    }

    /// Supremum of the admissible interval `[0, δ_b)`, by bisection.
    pub fn admissible_limit(self, k: usize) -> f64 {
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if self.admissible(k, 1.0 - f64::EPSILON) {
            return 1.0;
        }
        while hi - lo > 1e-14 {
            let mid = 0.5 * (lo + hi);
            if self.admissible(k, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Largest two-grid convergence factor `δ_TG` for which the cycle bound
/// guarantees uniform convergence: `δ_TG = 1 - inf f(δ)` over admissible `δ`.
pub fn solve_threshold(family: ThresholdFamily, k: usize) -> Result<ThresholdResult> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "threshold equations need k >= 2, got {k}"
        )));
    }
    let limit = family.admissible_limit(k);
    let f = |d: f64| family.lhs(k, d);
    // f is unimodal on the admissible interval; locate the minimum on a
    // coarse grid, then refine by golden-section search.
    let n = 4000;
    let h = limit / n as f64;
    let best = (0..n)
        .map(|i| i as f64 * h)
        .filter(|&d| family.admissible(k, d))
        .min_by(|&x, &y| f(x).total_cmp(&f(y)))
        .ok_or(Error::NoAdmissibleDelta(k))?;
    let (mut lo, mut hi) = ((best - h).max(0.0), (best + h).min(limit));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |d: f64| {
        if family.admissible(k, d) {
            f(d)
        } else {
            f64::INFINITY
        }
    };
    while hi - lo > 1e-13 {
        let x1 = hi - ratio * (hi - lo);
        let x2 = lo + ratio * (hi - lo);
        if eval(x1) <= eval(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let mut delta = 0.5 * (lo + hi);
    if !family.admissible(k, delta) {
        delta = lo;
    }
    let value = f(delta);
    let delta_tg = 1.0 - value;
    if !(delta_tg > 0.0) {
        return Err(Error::NoAdmissibleDelta(k));
    }
    Ok(ThresholdResult {
        delta,
        delta_tg,
        k,
        residual: (value - (1.0 - delta_tg)).abs(),
    })
}
