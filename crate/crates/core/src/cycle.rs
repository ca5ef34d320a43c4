//! Multilevel cycles and the stationary outer iteration.
//!
//! A cycle at level `l` presmooths with forward Gauss-Seidel from zero,
//! restricts the residual, solves the coarse problem approximately with an
//! inner method preconditioned by the cycle at level `l + 1`, prolongates
//! the correction and postsmooths with backward Gauss-Seidel. The coarse
//! problem on the last level is always solved exactly.

use std::fmt;
use std::str::FromStr;

use crate::accel::{
    chebyshev_apply, heavy_ball_apply, nesterov_apply, npcg_apply, InitialStep, MomentumOptions,
    Preconditioner, SpectralBounds,
};
use crate::direct::EnvelopeCholesky;
use crate::error::{check_dim, Error, Result};
use crate::hierarchy::Hierarchy;
use crate::smoothing::{gs_backward, gs_forward};
use crate::sparse::{all_finite, axpy, norm2, SparseMatrix};
use crate::spectral::{estimate_bounds, DEFAULT_LANCZOS_STEPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CycleKind {
    TwoGrid,
    /// Coarse correction repeated `k` times (`k = 1` V-cycle, `k = 2` W-cycle).
    KV,
    /// Chebyshev semi-iteration.
    Amli,
    /// Flexible conjugate gradients.
    K,
    /// Heavy-ball iteration.
    H,
    /// Nesterov iteration.
    N,
}

impl CycleKind {
    pub const ALL: [CycleKind; 6] = [
        CycleKind::TwoGrid,
        CycleKind::KV,
        CycleKind::Amli,
        CycleKind::K,
        CycleKind::H,
        CycleKind::N,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CycleKind::TwoGrid => "tg",
            CycleKind::KV => "kv",
            CycleKind::Amli => "amli",
            CycleKind::K => "k",
            CycleKind::H => "h",
            CycleKind::N => "n",
        }
    }

    /// Whether the inner solver uses spectral bounds.
    pub fn uses_bounds(self) -> bool {
        matches!(self, CycleKind::Amli | CycleKind::H | CycleKind::N)
    }
}

impl fmt::Display for CycleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CycleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tg" | "two-grid" | "twogrid" => Ok(CycleKind::TwoGrid),
            "kv" | "v" => Ok(CycleKind::KV),
            "amli" => Ok(CycleKind::Amli),
            "k" | "kcycle" => Ok(CycleKind::K),
            "h" | "hcycle" => Ok(CycleKind::H),
            "n" | "ncycle" => Ok(CycleKind::N),
            other => Err(Error::InvalidArgument(format!(
                "unknown cycle '{other}' (expected tg, kv, amli, k, h or n)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundPolicy {
    /// The same bounds on every level.
    Fixed(SpectralBounds),
    /// Lanczos estimates of `λ(B_l A_l)`, computed from the coarsest level up.
    EstimatePerLevel,
}

impl fmt::Display for BoundPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundPolicy::Fixed(b) => write!(f, "fixed:{b}"),
            BoundPolicy::EstimatePerLevel => f.write_str("estimate"),
        }
    }
}

impl FromStr for BoundPolicy {
    type Err = Error;

    /// `estimate` or `fixed:<min>,<max>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "estimate" {
            return Ok(BoundPolicy::EstimatePerLevel);
        }
        let bad = || Error::InvalidArgument(format!("bad bounds '{s}' (estimate | fixed:min,max)"));
        let rest = s.strip_prefix("fixed:").ok_or_else(bad)?;
        let (lo, hi) = rest.split_once(',').ok_or_else(bad)?;
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        Ok(BoundPolicy::Fixed(SpectralBounds::new(lo, hi)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSpec {
    pub kind: CycleKind,
    /// Inner steps; ignored by the two-grid method.
    pub k: usize,
    pub bounds: BoundPolicy,
    pub momentum: MomentumOptions,
    /// Replace the inner iteration onto the coarsest level by a single exact
    /// solve. Off by default: the accelerator then runs its `k` steps with
    /// `A_J^{-1}` as preconditioner, as the recursive definition says.
    pub exact_coarsest: bool,
}

impl CycleSpec {
    pub fn new(kind: CycleKind, k: usize, bounds: BoundPolicy) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("cycle k must be at least 1".into()));
        }
        Ok(Self {
            kind,
            k,
            bounds,
            momentum: MomentumOptions::default(),
            exact_coarsest: false,
        })
    }

    /// Spec with fixed bounds `[lambda_min, 1]`.
    pub fn fixed(kind: CycleKind, k: usize, lambda_min: f64) -> Result<Self> {
        Self::new(kind, k, BoundPolicy::Fixed(SpectralBounds::new(lambda_min, 1.0)?))
    }

    pub fn two_grid() -> Self {
        Self {
            kind: CycleKind::TwoGrid,
            k: 1,
            bounds: BoundPolicy::Fixed(SpectralBounds::default()),
            momentum: MomentumOptions::default(),
            exact_coarsest: false,
        }
    }

    pub fn with_init(mut self, init: InitialStep) -> Self {
        self.momentum.init = init;
        self
    }

    pub fn with_exact_coarsest(mut self, exact: bool) -> Self {
        self.exact_coarsest = exact;
        self
    }
}

/// Preconditioner `B_0` defined by a cycle over a hierarchy.
pub struct Multigrid<'h> {
    hierarchy: &'h Hierarchy,
    spec: CycleSpec,
    /// Bounds on `λ(B_l A_l)` for every level.
    level_bounds: Vec<SpectralBounds>,
    two_grid: Option<EnvelopeCholesky>,
}

/// `B_l` as a standalone preconditioner on level `l`.
pub struct LevelPreconditioner<'a, 'h> {
    mg: &'a Multigrid<'h>,
    level: usize,
}

impl Preconditioner for LevelPreconditioner<'_, '_> {
    fn dim(&self) -> usize {
        self.mg.hierarchy.matrix(self.level).n_rows()
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        self.mg.cycle_apply(self.level, r)
    }
}

impl<'h> Multigrid<'h> {
    /// Builds the cycle, estimating per-level bounds with default settings
    /// when the policy asks for it.
    pub fn new(hierarchy: &'h Hierarchy, spec: CycleSpec) -> Result<Self> {
        Self::with_estimation(hierarchy, spec, DEFAULT_LANCZOS_STEPS, 0)
    }

    pub fn with_estimation(
        hierarchy: &'h Hierarchy,
        spec: CycleSpec,
        lanczos_steps: usize,
        seed: u64,
    ) -> Result<Self> {
        if spec.k == 0 {
            return Err(Error::InvalidArgument("cycle k must be at least 1".into()));
        }
        let levels = hierarchy.num_levels();
        let two_grid = if spec.kind == CycleKind::TwoGrid {
            if levels < 2 {
                return Err(Error::InvalidArgument(
                    "the two-grid method needs at least two levels".into(),
                ));
            }
            // With exactly two levels the coarsest factor already solves A_1.
            (levels > 2)
                .then(|| EnvelopeCholesky::factor(hierarchy.matrix(1)))
                .transpose()?
        } else {
            None
        };
        let initial = match spec.bounds {
            BoundPolicy::Fixed(b) => b,
            BoundPolicy::EstimatePerLevel => SpectralBounds::new(1.0, 1.0)?,
        };
        let mut mg = Self {
            hierarchy,
            spec,
            level_bounds: vec![initial; levels],
            two_grid,
        };
        if spec.bounds == BoundPolicy::EstimatePerLevel && spec.kind != CycleKind::TwoGrid {
            mg.estimate_level_bounds(lanczos_steps, seed)?;
        }
        Ok(mg)
    }

    /// Builds the cycle with caller-supplied bounds on `λ(B_l A_l)`, one per
    /// level, ignoring the spec's bound policy.
    pub fn with_level_bounds(
        hierarchy: &'h Hierarchy,
        spec: CycleSpec,
        level_bounds: Vec<SpectralBounds>,
    ) -> Result<Self> {
        check_dim(hierarchy.num_levels(), level_bounds.len())?;
        for b in &level_bounds {
            SpectralBounds::new(b.lambda_min, b.lambda_max)?;
        }
        let mut mg = Self::with_estimation(
            hierarchy,
            CycleSpec {
                bounds: BoundPolicy::Fixed(SpectralBounds::default()),
                ..spec
            },
            DEFAULT_LANCZOS_STEPS,
            0,
        )?;
        mg.spec = spec;
        mg.level_bounds = level_bounds;
        Ok(mg)
    }

    /// Estimates `λ(B_l A_l)` from level `J-1` up to level 0. The inner
    /// solvers start from `x¹ = Bb` during estimation so that every `B_l` is
    /// linear; the coarsest level keeps `(1, 1)`.
    fn estimate_level_bounds(&mut self, steps: usize, seed: u64) -> Result<()> {
        let saved = self.spec.momentum.init;
        self.spec.momentum.init = InitialStep::Preconditioned;
        let coarsest = self.hierarchy.coarsest_index();
        let mut result = Ok(());
        for l in (0..coarsest).rev() {
            let est = estimate_bounds(
                self.hierarchy.matrix(l),
                &self.level_preconditioner(l),
                steps,
                seed.wrapping_add(l as u64),
            );
            match est {
                Ok(e) => self.level_bounds[l] = e.bounds(),
                Err(e) => {
                    result = Err(e);
                    break;
                }
            }
        }
        self.spec.momentum.init = saved;
        result
    }

    pub fn spec(&self) -> &CycleSpec {
        &self.spec
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        self.hierarchy
    }

    pub fn level_bounds(&self) -> &[SpectralBounds] {
        &self.level_bounds
    }

    pub fn level_preconditioner(&self, level: usize) -> LevelPreconditioner<'_, 'h> {
        LevelPreconditioner { mg: self, level }
    }

    /// `B_l r`.
    pub fn cycle_apply(&self, level: usize, r: &[f64]) -> Result<Vec<f64>> {
        let h = self.hierarchy;
        check_dim(h.matrix(level).n_rows(), r.len())?;
        if level == h.coarsest_index() {
            return h.coarsest_solver().solve(r);
        }
        let a = h.matrix(level);
        let p = h.level(level).p.as_ref().expect("non-coarsest level has a prolongation");
        let mut x = vec![0.0; r.len()];
        gs_forward(a, r, &mut x)?;
        let coarse_r = p.spmv_transpose(&a.residual(r, &x)?)?;
        let coarse_e = self.coarse_correction(level + 1, &coarse_r)?;
        axpy(1.0, &p.spmv(&coarse_e)?, &mut x);
        gs_backward(a, r, &mut x)?;
        if !all_finite(&x) {
            return Err(Error::Diverged(format!("non-finite values on level {level}")));
        }
        Ok(x)
    }

    fn coarse_correction(&self, level: usize, r: &[f64]) -> Result<Vec<f64>> {
        let h = self.hierarchy;
        if self.spec.exact_coarsest && level == h.coarsest_index() {
            return h.coarsest_solver().solve(r);
        }
        let a = h.matrix(level);
        let b = self.level_preconditioner(level);
        let k = self.spec.k;
        let bounds = self.level_bounds[level];
        match self.spec.kind {
            CycleKind::TwoGrid => unreachable!("two-grid uses its own coarse solve"),
            CycleKind::KV => {
                let mut e = b.apply(r)?;
                for _ in 1..k {
                    let z = b.apply(&a.residual(r, &e)?)?;
                    axpy(1.0, &z, &mut e);
                }
                Ok(e)
            }
            CycleKind::Amli => chebyshev_apply(a, &b, r, k, bounds),
            CycleKind::K => npcg_apply(a, &b, r, k),
            CycleKind::H => heavy_ball_apply(a, &b, r, k, bounds, self.spec.momentum),
            CycleKind::N => nesterov_apply(a, &b, r, k, bounds, self.spec.momentum),
        }
    }

    /// Presmoothing, exact level-1 solve, postsmoothing.
    pub fn two_grid_apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        let h = self.hierarchy;
        if self.spec.kind != CycleKind::TwoGrid {
            return Err(Error::InvalidArgument(
                "multigrid was not built as a two-grid method".into(),
            ));
        }
        let a = h.matrix(0);
        check_dim(a.n_rows(), r.len())?;
        let p = h.level(0).p.as_ref().expect("two-grid hierarchy has a prolongation");
        let mut x = vec![0.0; r.len()];
        gs_forward(a, r, &mut x)?;
        let coarse_r = p.spmv_transpose(&a.residual(r, &x)?)?;
        let coarse_e = match &self.two_grid {
            Some(solver) => solver.solve(&coarse_r)?,
            None => h.coarsest_solver().solve(&coarse_r)?,
        };
        axpy(1.0, &p.spmv(&coarse_e)?, &mut x);
        gs_backward(a, r, &mut x)?;
        Ok(x)
    }
}

impl Preconditioner for Multigrid<'_> {
    fn dim(&self) -> usize {
        self.hierarchy.matrix(0).n_rows()
    }

    fn apply(&self, r: &[f64]) -> Result<Vec<f64>> {
        if self.spec.kind == CycleKind::TwoGrid {
            self.two_grid_apply(r)
        } else {
            self.cycle_apply(0, r)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Diverged,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Converged => "converged",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::Diverged => "diverged",
        })
    }
}

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS: usize = 999;
/// Relative residual above which the outer iteration is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖r_m‖ / ‖b‖` for `m = 0..=iterations` (the first entry is 1).
    pub residual_history: Vec<f64>,
    pub avg_factor: f64,
    pub status: SolveStatus,
    /// Set when the preconditioner itself failed.
    pub failure: Option<String>,
}

/// Geometric mean of the last five residual reduction ratios, or of all of
/// them when fewer are available.
pub fn average_factor(history: &[f64]) -> f64 {
    if history.len() < 2 {
        return f64::NAN;
    }
    let m = history.len() - 1;
    let span = m.min(5);
    (history[m] / history[m - span]).powf(1.0 / span as f64)
}

/// `x ← x + B(b - A x)` from `x = 0` until `‖r‖/‖b‖ <= tol`.
///
/// Divergence (relative residual above [`DIVERGENCE_THRESHOLD`], non-finite
/// values, or a breakdown inside the preconditioner) is a status, not an
/// error.
pub fn stationary_solve(
    a: &SparseMatrix,
    b_op: &dyn Preconditioner,
    b: &[f64],
    options: SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    check_dim(a.n_rows(), a.n_cols())?;
    check_dim(a.n_rows(), b.len())?;
    check_dim(a.n_rows(), b_op.dim())?;
    let b_norm = norm2(b);
    if !(b_norm > 0.0) {
        return Err(Error::InvalidArgument("right-hand side must be non-zero".into()));
    }
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut history = vec![1.0];
    let mut status = SolveStatus::MaxIterations;
    let mut failure = None;
    for _ in 0..options.max_iters {
        let z = match b_op.apply(&r) {
            Ok(z) => z,
            Err(
                e @ (Error::Diverged(_)
                | Error::NonPositiveCurvature(_)
                | Error::NotPositiveDefinite { .. }),
            ) => {
                status = SolveStatus::Diverged;
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        axpy(1.0, &z, &mut x);
        r = a.residual(b, &x)?;
        let rel = norm2(&r) / b_norm;
        history.push(rel);
        if !rel.is_finite() || rel > DIVERGENCE_THRESHOLD {
            status = SolveStatus::Diverged;
            break;
        }
        if rel <= options.tol {
            status = SolveStatus::Converged;
            break;
        }
    }
    let report = SolveReport {
        iterations: history.len() - 1,
        avg_factor: average_factor(&history),
        residual_history: history,
        status,
        failure,
    };
    Ok((x, report))
}
