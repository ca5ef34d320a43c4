//! Unsmoothed aggregation setup: greedy aggregation, piecewise-constant
//! prolongation and Galerkin coarsening.

use std::fmt::Write as _;

use crate::accel::SpectralBounds;
use crate::direct::DenseCholesky;
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const DEFAULT_THETA: f64 = 0.08;
pub const DEFAULT_COARSEST_SIZE: usize = 100;
pub const DEFAULT_MAX_LEVELS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateMap {
    /// Aggregate id of every fine node.
    pub assignment: Vec<usize>,
    pub n_aggregates: usize,
}

impl AggregateMap {
    /// Members of every aggregate, in ascending node order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_aggregates];
        for (node, &agg) in self.assignment.iter().enumerate() {
            groups[agg].push(node);
        }
        groups
    }
}

/// Greedy strength-based aggregation.
///
/// `j` is a strong neighbour of `i` when `|a_ij| >= theta * sqrt(a_ii a_jj)`.
/// Nodes are swept in index order; an unaggregated node with at least one
/// unaggregated strong neighbour seeds an aggregate containing itself and
/// all of those neighbours. Nodes left over join the adjacent aggregate they
/// are most strongly coupled to, or become singletons.
pub fn aggregate(a: &SparseMatrix, theta: f64) -> Result<AggregateMap> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "strength threshold must lie in [0, 1), got {theta}"
        )));
    }
    let n = a.n_rows();
    let diag = a.diagonal();
    if let Some((row, &value)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(Error::NonPositiveDiagonal { row, value });
    }
    let strong = |i: usize, j: usize, v: f64| {
        j != i && v != 0.0 && v.abs() >= theta * (diag[i] * diag[j]).sqrt()
    };

    const NONE: usize = usize::MAX;
    let mut assignment = vec![NONE; n];
    let mut n_aggregates = 0;
    let mut deferred = Vec::new();
    for i in 0..n {
        if assignment[i] != NONE {
            continue;
        }
        let (cols, vals) = a.row(i);
        let free: Vec<usize> = cols
            .iter()
            .zip(vals)
            .filter(|&(&j, &v)| strong(i, j, v) && assignment[j] == NONE)
            .map(|(&j, _)| j)
            .collect();
        if free.is_empty() {
            deferred.push(i);
            continue;
        }
        assignment[i] = n_aggregates;
        for j in free {
            assignment[j] = n_aggregates;
        }
        n_aggregates += 1;
    }
    for i in deferred {
        let (cols, vals) = a.row(i);
        let mut best: Option<(f64, usize)> = None;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i || v == 0.0 || assignment[j] == NONE {
                continue;
            }
            if best.is_none_or(|(w, _)| v.abs() > w) {
                best = Some((v.abs(), assignment[j]));
            }
        }
        assignment[i] = match best {
            Some((_, agg)) => agg,
            None => {
                n_aggregates += 1;
                n_aggregates - 1
            }
        };
    }
    Ok(AggregateMap {
        assignment,
        n_aggregates,
    })
}

/// Neighbourhood aggregation in three passes.
///
/// Pass 1 sweeps nodes in index order and turns `i` plus its strong
/// neighbourhood into an aggregate when none of those nodes is aggregated
/// yet. Pass 2 attaches every remaining node to the pass-1 aggregate it is
/// most strongly coupled to. Pass 3 groups whatever is left greedily, as in
/// [`aggregate`].
pub fn aggregate_neighborhoods(a: &SparseMatrix, theta: f64) -> Result<AggregateMap> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "strength threshold must lie in [0, 1), got {theta}"
        )));
    }
    let n = a.n_rows();
    let diag = a.diagonal();
    if let Some((row, &value)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(Error::NonPositiveDiagonal { row, value });
    }
    let strong_neighbours = |i: usize| -> Vec<(usize, f64)> {
        let (cols, vals) = a.row(i);
        cols.iter()
            .zip(vals)
            .filter(|&(&j, &v)| j != i && v != 0.0 && v.abs() >= theta * (diag[i] * diag[j]).sqrt())
            .map(|(&j, &v)| (j, v.abs()))
            .collect()
    };

    const NONE: usize = usize::MAX;
    let mut assignment = vec![NONE; n];
    let mut n_aggregates = 0;
    for i in 0..n {
        if assignment[i] != NONE {
            continue;
        }
        let nbrs = strong_neighbours(i);
        if nbrs.is_empty() || nbrs.iter().any(|&(j, _)| assignment[j] != NONE) {
            continue;
        }
        assignment[i] = n_aggregates;
        for (j, _) in nbrs {
            assignment[j] = n_aggregates;
        }
        n_aggregates += 1;
    }
    let first_pass = assignment.clone();
    for i in 0..n {
        if first_pass[i] != NONE {
            continue;
        }
        let mut best: Option<(f64, usize)> = None;
        for (j, w) in strong_neighbours(i) {
            if first_pass[j] != NONE && best.is_none_or(|(bw, _)| w > bw) {
                best = Some((w, first_pass[j]));
            }
        }
        if let Some((_, agg)) = best {
            assignment[i] = agg;
        }
    }
    for i in 0..n {
        if assignment[i] != NONE {
            continue;
        }
        assignment[i] = n_aggregates;
        for (j, _) in strong_neighbours(i) {
            if assignment[j] == NONE {
                assignment[j] = n_aggregates;
            }
        }
        n_aggregates += 1;
    }
    Ok(AggregateMap {
        assignment,
        n_aggregates,
    })
}

/// One pass of heavy-edge matching: nodes are visited in index order and
/// each unmatched node is paired with its unmatched strong neighbour of
/// largest relative strength `|a_ij| / sqrt(a_ii a_jj)` (first one on ties).
/// Nodes without such a neighbour stay singletons.
pub fn pairwise_matching(a: &SparseMatrix, theta: f64) -> Result<AggregateMap> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!(
            "strength threshold must lie in [0, 1), got {theta}"
        )));
    }
    let n = a.n_rows();
    let diag = a.diagonal();
    if let Some((row, &value)) = diag.iter().enumerate().find(|(_, d)| !(**d > 0.0)) {
        return Err(Error::NonPositiveDiagonal { row, value });
    }
    const NONE: usize = usize::MAX;
    let mut assignment = vec![NONE; n];
    let mut n_aggregates = 0;
    for i in 0..n {
        if assignment[i] != NONE {
            continue;
        }
        let (cols, vals) = a.row(i);
        // Strength relative to the largest off-diagonal of the row, so chains
        // left weakly coupled after semi-coarsening still get matched.
        let row_max = cols
            .iter()
            .zip(vals)
            .filter(|(&j, _)| j != i)
            .fold(0.0_f64, |m, (_, v)| m.max(v.abs()));
        let mut best: Option<(f64, usize)> = None;
        for (&j, &v) in cols.iter().zip(vals) {
            if j == i || assignment[j] != NONE || v == 0.0 {
                continue;
            }
            let strength = v.abs() / row_max;
            if strength >= theta && best.is_none_or(|(s, _)| strength > s) {
                best = Some((strength, j));
            }
        }
        assignment[i] = n_aggregates;
        if let Some((_, j)) = best {
            assignment[j] = n_aggregates;
        }
        n_aggregates += 1;
    }
    Ok(AggregateMap {
        assignment,
        n_aggregates,
    })
}

/// Two rounds of [`pairwise_matching`]: the second round matches the
/// aggregates of the first on their Galerkin operator, giving aggregates of
/// up to four nodes.
pub fn double_pairwise(a: &SparseMatrix, theta: f64) -> Result<AggregateMap> {
    let first = pairwise_matching(a, theta)?;
    let coarse = SparseMatrix::triple_product(&build_prolongation(&first), a)?;
    let second = pairwise_matching(&coarse, theta)?;
    Ok(AggregateMap {
        assignment: first
            .assignment
            .iter()
            .map(|&c| second.assignment[c])
            .collect(),
        n_aggregates: second.n_aggregates,
    })
}

/// Piecewise-constant prolongation: `P[i, c] = 1` iff node `i` is in aggregate `c`.
pub fn build_prolongation(map: &AggregateMap) -> SparseMatrix {
    let n = map.assignment.len();
    SparseMatrix::from_csr(
        n,
        map.n_aggregates,
        (0..=n).collect(),
        map.assignment.clone(),
        vec![1.0; n],
    )
    .expect("aggregate ids are below n_aggregates")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregationScheme {
    /// [`double_pairwise`].
    #[default]
    Matching,
    /// [`aggregate`].
    Greedy,
    /// [`aggregate_neighborhoods`].
    Neighborhood,
}

impl std::str::FromStr for AggregationScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matching" => Ok(Self::Matching),
            "greedy" => Ok(Self::Greedy),
            "neighborhood" => Ok(Self::Neighborhood),
            other => Err(Error::InvalidArgument(format!(
                "unknown aggregation scheme '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for AggregationScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Matching => "matching",
            Self::Greedy => "greedy",
            Self::Neighborhood => "neighborhood",
        })
    }
}

impl AggregationScheme {
    pub fn aggregate(self, a: &SparseMatrix, theta: f64) -> Result<AggregateMap> {
        match self {
            Self::Matching => double_pairwise(a, theta),
            Self::Greedy => aggregate(a, theta),
            Self::Neighborhood => aggregate_neighborhoods(a, theta),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HierarchyConfig {
    pub scheme: AggregationScheme,
    pub theta: f64,
    pub coarsest_size: usize,
    pub max_levels: usize,
}

impl Default for HierarchyConfig {
    fn default() -> Self {
        Self {
            scheme: AggregationScheme::default(),
            theta: DEFAULT_THETA,
            coarsest_size: DEFAULT_COARSEST_SIZE,
            max_levels: DEFAULT_MAX_LEVELS,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Level {
    pub a: SparseMatrix,
    /// Prolongation to this level from the next coarser one; `None` on the
    /// coarsest level.
    pub p: Option<SparseMatrix>,
    pub aggregates: Option<AggregateMap>,
}

/// Multilevel hierarchy. Level 0 holds the input matrix; the last level is
/// solved exactly with a dense Cholesky factor.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
    coarsest: DenseCholesky,
}

impl Hierarchy {
    pub fn build(a: SparseMatrix, config: &HierarchyConfig) -> Result<Self> {
        if a.n_rows() != a.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: a.n_rows(),
                got: a.n_cols(),
            });
        }
        if config.max_levels == 0 {
            return Err(Error::InvalidArgument("max_levels must be positive".into()));
        }
        let mut levels = vec![Level {
            a,
            p: None,
            aggregates: None,
        }];
        loop {
            let current = levels.last().unwrap();
            let n = current.a.n_rows();
            if n <= config.coarsest_size || levels.len() >= config.max_levels {
                break;
            }
            let map = config.scheme.aggregate(&current.a, config.theta)?;
            if map.n_aggregates >= n {
                return Err(Error::Stagnation {
                    level: levels.len() - 1,
                    size: n,
                });
            }
            let p = build_prolongation(&map);
            let coarse = SparseMatrix::triple_product(&p, &current.a)?;
            let last = levels.last_mut().unwrap();
            last.p = Some(p);
            last.aggregates = Some(map);
            levels.push(Level {
                a: coarse,
                p: None,
                aggregates: None,
            });
        }
        let coarsest = DenseCholesky::factor(&levels.last().unwrap().a)?;
        Ok(Self { levels, coarsest })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &Level {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn matrix(&self, l: usize) -> &SparseMatrix {
        &self.levels[l].a
    }

    pub fn coarsest_index(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn coarsest_solver(&self) -> &DenseCholesky {
        &self.coarsest
    }

    /// Total stored entries over all levels divided by those of level 0.
    pub fn operator_complexity(&self) -> f64 {
        let total: usize = self.levels.iter().map(|l| l.a.nnz()).sum();
        total as f64 / self.levels[0].a.nnz().max(1) as f64
    }

    /// CSV summary with one row per level. Spectral bounds are appended when
    /// given (one entry per level).
    pub fn summary_csv(&self, bounds: Option<&[SpectralBounds]>) -> String {
        let mut out = String::from("level,rows,nnz,operator_complexity,lambda_min,lambda_max\n");
        let mut cumulative = 0usize;
        let base = self.levels[0].a.nnz().max(1) as f64;
        for (l, level) in self.levels.iter().enumerate() {
            cumulative += level.a.nnz();
            let (lo, hi) = match bounds.and_then(|b| b.get(l)) {
                Some(b) => (format!("{:.6}", b.lambda_min), format!("{:.6}", b.lambda_max)),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{:.4},{},{}",
                l,
                level.a.n_rows(),
                level.a.nnz(),
                cumulative as f64 / base,
                lo,
                hi
            );
        }
        out
    }
}
