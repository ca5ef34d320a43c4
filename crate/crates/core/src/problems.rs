//! Linear finite-element model problems on the unit square.
//!
//! Each grid square of a uniform `m x m` mesh is split by the diagonal from
//! its lower-left to its upper-right corner. Homogeneous Dirichlet nodes are
//! eliminated; the interior node `(i, j)`, `1 <= i, j <= m-1`, gets index
//! `(j-1)(m-1) + (i-1)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::sparse::SparseMatrix;

/// Coefficient inside the two high-conductivity squares of the jump problem.
pub const JUMP_INSIDE: f64 = 1.0;
/// Coefficient everywhere else in the jump problem.
pub const JUMP_OUTSIDE: f64 = 1e-6;
/// `y`-direction diffusivity of the anisotropic problem.
pub const ANISOTROPY: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Example {
    /// `-Δu = f`.
    Poisson,
    /// `-∇·(a ∇u) = f` with `a = 1` on `[0.25,0.5]² ∪ [0.5,0.75]²`, `1e-6` elsewhere.
    JumpDiffusion,
    /// `-u_xx - 1e-3 u_yy = f`.
    Anisotropic,
}

impl Example {
    pub const ALL: [Example; 3] = [Example::Poisson, Example::JumpDiffusion, Example::Anisotropic];

    pub fn name(self) -> &'static str {
        match self {
            Example::Poisson => "poisson",
            Example::JumpDiffusion => "jump",
            Example::Anisotropic => "aniso",
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Example {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "poisson" => Ok(Example::Poisson),
            "jump" => Ok(Example::JumpDiffusion),
            "aniso" => Ok(Example::Anisotropic),
            other => Err(Error::InvalidArgument(format!(
                "unknown example '{other}' (expected poisson, jump or aniso)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub example: Example,
    /// Number of mesh intervals per direction, `h = 1/m`.
    pub m: usize,
}

impl ProblemSpec {
    pub fn new(example: Example, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "mesh parameter m must be at least 2, got {m}"
            )));
        }
        Ok(Self { example, m })
    }

    /// Interior unknowns, `(m-1)²`.
    pub fn dofs(&self) -> usize {
        (self.m - 1) * (self.m - 1)
    }
}

fn in_jump_region(x: f64, y: f64) -> bool {
    let inside = |lo: f64, hi: f64| lo <= x && x <= hi && lo <= y && y <= hi;
    inside(0.25, 0.5) || inside(0.5, 0.75)
}

/// Scalar coefficient and diagonal diffusion tensor on the element with
/// the given centroid.
fn coefficients(example: Example, cx: f64, cy: f64) -> (f64, f64, f64) {
    match example {
        Example::Poisson => (1.0, 1.0, 1.0),
        Example::JumpDiffusion => {
            let a = if in_jump_region(cx, cy) {
                JUMP_INSIDE
            } else {
                JUMP_OUTSIDE
            };
            (a, 1.0, 1.0)
        }
        Example::Anisotropic => (1.0, 1.0, ANISOTROPY),
    }
}

/// P1 element stiffness for a triangle with vertices `p`, coefficient `a`
/// and tensor `diag(dx, dy)`.
fn element_stiffness(p: [(f64, f64); 3], a: f64, dx: f64, dy: f64) -> [[f64; 3]; 3] {
    let (x0, y0) = p[0];
    let (x1, y1) = p[1];
    let (x2, y2) = p[2];
    let det = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    let area = 0.5 * det.abs();
    // Gradients of the barycentric basis functions.
    let grads = [
        ((y1 - y2) / det, (x2 - x1) / det),
        ((y2 - y0) / det, (x0 - x2) / det),
        ((y0 - y1) / det, (x1 - x0) / det),
    ];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = a * area * (dx * grads[i].0 * grads[j].0 + dy * grads[i].1 * grads[j].1);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

/// Assembles the stiffness matrix over interior nodes.
pub fn assemble(spec: &ProblemSpec) -> Result<SparseMatrix> {
    let m = spec.m;
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "mesh parameter m must be at least 2, got {m}"
        )));
    }
    let h = 1.0 / m as f64;
    let n = spec.dofs();
    let interior = |i: usize, j: usize| -> Option<usize> {
        (i >= 1 && i < m && j >= 1 && j < m).then(|| (j - 1) * (m - 1) + (i - 1))
    };
    let mut triplets = Vec::with_capacity(7 * n + 16);
    for jy in 0..m {
        for ix in 0..m {
            let corners = [(ix, jy), (ix + 1, jy), (ix + 1, jy + 1), (ix, jy + 1)];
            for tri in [[0usize, 1, 2], [0, 2, 3]] {
                let nodes = tri.map(|c| corners[c]);
                let pts = nodes.map(|(i, j)| (i as f64 * h, j as f64 * h));
                let cx = (pts[0].0 + pts[1].0 + pts[2].0) / 3.0;
                let cy = (pts[0].1 + pts[1].1 + pts[2].1) / 3.0;
                let (a, dx, dy) = coefficients(spec.example, cx, cy);
                // P1 stiffness is invariant under uniform scaling, so local
                // integer coordinates give exact element matrices.
                let local = nodes.map(|(i, j)| ((i - ix) as f64, (j - jy) as f64));
                let k = element_stiffness(local, a, dx, dy);
                let dofs = nodes.map(|(i, j)| interior(i, j));
                for r in 0..3 {
                    let Some(gr) = dofs[r] else { continue };
                    for c in 0..3 {
                        let Some(gc) = dofs[c] else { continue };
                        if k[r][c] != 0.0 {
                            triplets.push((gr, gc, k[r][c]));
                        }
                    }
                }
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets)
}

/// `[1, 2, ..., n]`.
pub fn true_solution(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64).collect()
}

/// `b = A x_true`.
pub fn rhs_for(a: &SparseMatrix, x_true: &[f64]) -> Result<Vec<f64>> {
    check_dim(a.n_cols(), x_true.len())?;
    a.spmv(x_true)
}
