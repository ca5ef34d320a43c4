#![allow(dead_code)]

use mgcycles::hierarchy::{AggregationScheme, Hierarchy, HierarchyConfig};
use mgcycles::poly::PolynomialSpec;
use mgcycles::problems::{assemble, Example, ProblemSpec};
use mgcycles::{Preconditioner, SparseMatrix};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_dense(a: &SparseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.n_rows(), a.n_cols(), &a.to_dense())
}

pub fn to_sparse(m: &DMatrix<f64>) -> SparseMatrix {
    let data: Vec<f64> = m.transpose().iter().copied().collect();
    SparseMatrix::from_dense(m.nrows(), m.ncols(), &data).unwrap()
}

/// `Q diag(eigs) Qᵀ` with a random orthogonal `Q`, symmetrized exactly.
pub fn spd_with_spectrum(eigs: &[f64], rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let n = eigs.len();
    let g = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = g.qr().q();
    let m = &q * DMatrix::from_diagonal(&DVector::from_column_slice(eigs)) * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// Eigenvalues log-uniform in `[lo, hi]`, both ends included.
pub fn log_uniform_spectrum(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut e: Vec<f64> = (0..n)
        .map(|_| (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp())
        .collect();
    e[0] = lo;
    if n > 1 {
        e[n - 1] = hi;
    }
    e
}

pub fn jacobi(a: &SparseMatrix) -> SparseMatrix {
    let n = a.n_rows();
    let d = a.diagonal();
    let t: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0 / d[i])).collect();
    SparseMatrix::from_triplets(n, n, &t).unwrap()
}

/// Columns `B e_j` of a (linear) preconditioner.
pub fn densify(p: &dyn Preconditioner) -> DMatrix<f64> {
    let n = p.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = p.apply(&e).unwrap();
        e[j] = 0.0;
        for i in 0..n {
            m[(i, j)] = col[i];
        }
    }
    m
}

/// `D^{1/2} A D^{1/2}` for a diagonal SPD `B = D`; similar to `BA`.
pub fn symmetric_ba(a: &DMatrix<f64>, b_diag: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    DMatrix::from_fn(n, n, |i, j| b_diag[i].sqrt() * a[(i, j)] * b_diag[j].sqrt())
}

/// Extreme eigenvalues of `BA` for diagonal `B`.
pub fn ba_extremes(a: &DMatrix<f64>, b_diag: &[f64]) -> (f64, f64) {
    let ev = SymmetricEigen::new(symmetric_ba(a, b_diag)).eigenvalues;
    (ev.min(), ev.max())
}

/// `p(BA)` through the eigendecomposition of the symmetric similar matrix.
pub fn poly_of_ba(p: &PolynomialSpec, a: &DMatrix<f64>, b_diag: &[f64]) -> DMatrix<f64> {
    let n = a.nrows();
    let eig = SymmetricEigen::new(symmetric_ba(a, b_diag));
    let pv = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&x| p.p_eval(x).unwrap()));
    let ps = &eig.eigenvectors * DMatrix::from_diagonal(&pv) * eig.eigenvectors.transpose();
    DMatrix::from_fn(n, n, |i, j| ps[(i, j)] * b_diag[i].sqrt() / b_diag[j].sqrt())
}

pub fn a_norm(a: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    v.dot(&(a * v)).sqrt()
}

pub fn poisson_hierarchy(m: usize, coarsest_size: usize) -> Hierarchy {
    let a = assemble(&ProblemSpec::new(Example::Poisson, m).unwrap()).unwrap();
    let config = HierarchyConfig {
        coarsest_size,
        ..HierarchyConfig::default()
    };
    Hierarchy::build(a, &config).unwrap()
}

pub fn greedy_hierarchy(m: usize, coarsest_size: usize) -> Hierarchy {
    let a = assemble(&ProblemSpec::new(Example::Poisson, m).unwrap()).unwrap();
    let config = HierarchyConfig {
        scheme: AggregationScheme::Greedy,
        coarsest_size,
        ..HierarchyConfig::default()
    };
    Hierarchy::build(a, &config).unwrap()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}
