//! Experiment driver: runs every (example, m, cycle) combination and
//! formats the results as CSV or markdown tables.
//!
//! Config files are flat `key = value` lines; `#` starts a comment.
//!
//! ```text
//! examples = poisson, jump
//! m = 64, 128, 256
//! cycles = tg; kv:1; kv:2; n:2:fixed:0,1; amli:3:estimate
//! tol = 1e-12
//! max_iters = 999
//! aggregation = matching
//! theta = 0.08
//! coarsest_size = 100
//! max_levels = 20
//! seed = 0
//! lanczos_steps = 20
//! exact_coarsest = false
//! ```
//!
//! A cycle entry is `kind[:k[:bounds]]` with `bounds` either `estimate` or
//! `fixed:<min>,<max>`; the defaults are `k = 1` and `fixed:0,1`.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use crate::accel::SpectralBounds;
use crate::cycle::{
    stationary_solve, BoundPolicy, CycleKind, CycleSpec, Multigrid, SolveOptions, SolveStatus,
    DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::hierarchy::{
    AggregationScheme, Hierarchy, HierarchyConfig, DEFAULT_COARSEST_SIZE, DEFAULT_MAX_LEVELS, DEFAULT_THETA,
};
use crate::problems::{assemble, rhs_for, true_solution, Example, ProblemSpec};
use crate::spectral::DEFAULT_LANCZOS_STEPS;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub examples: Vec<Example>,
    pub ms: Vec<usize>,
    pub cycles: Vec<CycleSpec>,
    pub tol: f64,
    pub max_iters: usize,
    pub aggregation: AggregationScheme,
    pub theta: f64,
    pub coarsest_size: usize,
    pub max_levels: usize,
    pub seed: u64,
    pub lanczos_steps: usize,
    /// Applied to every cycle, see [`CycleSpec::exact_coarsest`].
    pub exact_coarsest: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            examples: vec![Example::Poisson],
            ms: vec![64, 128, 256, 512],
            cycles: Vec::new(),
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            aggregation: AggregationScheme::default(),
            theta: DEFAULT_THETA,
            coarsest_size: DEFAULT_COARSEST_SIZE,
            max_levels: DEFAULT_MAX_LEVELS,
            seed: 0,
            lanczos_steps: DEFAULT_LANCZOS_STEPS,
            exact_coarsest: false,
        }
    }
}

/// Parses `kind[:k[:bounds]]`.
pub fn parse_cycle(s: &str) -> Result<CycleSpec> {
    let s = s.trim();
    let mut parts = s.splitn(3, ':');
    let kind: CycleKind = parts.next().unwrap_or_default().parse()?;
    if kind == CycleKind::TwoGrid {
        return Ok(CycleSpec::two_grid());
    }
    let k = match parts.next() {
        Some(k) => k
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad k in cycle '{s}'")))?,
        None => 1,
    };
    let bounds = match parts.next() {
        Some(b) => b.parse()?,
        None => BoundPolicy::Fixed(SpectralBounds::default()),
    };
    CycleSpec::new(kind, k, bounds)
}

/// Inverse of [`parse_cycle`].
pub fn format_cycle(spec: &CycleSpec) -> String {
    match spec.kind {
        CycleKind::TwoGrid => "tg".to_string(),
        _ => format!("{}:{}:{}", spec.kind, spec.k, spec.bounds),
    }
}

/// Every cycle configuration reported for the model problems: two-grid,
/// kV (k = 1..3), K (k = 2, 3), AMLI/H/N with estimated bounds and fixed
/// `λmin` (0 and 0.1) for k = 2, 3, and the large-k AMLI/H/N sweeps.
pub fn standard_cycles() -> Vec<CycleSpec> {
    let mut out = vec![CycleSpec::two_grid()];
    let spec = |kind, k, b: &str| CycleSpec::new(kind, k, b.parse().unwrap()).unwrap();
    for k in 1..=3 {
        out.push(spec(CycleKind::KV, k, "fixed:0,1"));
    }
    for k in 2..=3 {
        out.push(spec(CycleKind::K, k, "fixed:0,1"));
    }
    for (kind, policies) in [
        (CycleKind::Amli, &["estimate", "fixed:0,1"][..]),
        (CycleKind::H, &["estimate", "fixed:0.1,1", "fixed:0,1"][..]),
        (CycleKind::N, &["estimate", "fixed:0,1"][..]),
    ] {
        for policy in policies {
            for k in 2..=3 {
                out.push(spec(kind, k, policy));
            }
        }
    }
    for (kind, policy) in [
        (CycleKind::Amli, "fixed:0,1"),
        (CycleKind::H, "fixed:0.1,1"),
        (CycleKind::N, "fixed:0,1"),
    ] {
        for k in 4..=7 {
            out.push(spec(kind, k, policy));
        }
    }
    out
}

fn parse_list<T: FromStr>(value: &str, key: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::InvalidArgument(format!("bad value '{s}' for {key}")))
        })
        .collect()
}

fn parse_scalar<T: FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("bad value '{value}' for {key}")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "examples" | "example" => self.examples = parse_list(value, key)?,
            "m" | "ms" => self.ms = parse_list(value, key)?,
            "cycles" | "cycle" => {
                self.cycles = if value.trim() == "standard" {
                    standard_cycles()
                } else {
                    value
                        .split([';', ' ', '\t'])
                        .filter(|s| !s.trim().is_empty())
                        .map(parse_cycle)
                        .collect::<Result<_>>()?
                }
            }
            "tol" => self.tol = parse_scalar(value, key)?,
            "max_iters" => self.max_iters = parse_scalar(value, key)?,
            "aggregation" => self.aggregation = parse_scalar(value, key)?,
            "theta" => self.theta = parse_scalar(value, key)?,
            "coarsest_size" => self.coarsest_size = parse_scalar(value, key)?,
            "max_levels" => self.max_levels = parse_scalar(value, key)?,
            "seed" => self.seed = parse_scalar(value, key)?,
            "lanczos_steps" => self.lanczos_steps = parse_scalar(value, key)?,
            "exact_coarsest" => self.exact_coarsest = parse_scalar(value, key)?,
            other => {
                return Err(Error::InvalidArgument(format!("unknown config key '{other}'")))
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: idx + 1,
                msg: "expected 'key = value'".into(),
            })?;
            config.set(key, value).map_err(|e| Error::Parse {
                line: idx + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if let Some(m) = self.ms.iter().find(|&&m| m < 2) {
            return bad(format!("mesh parameter m must be at least 2, got {m}"));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tolerance must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 || self.max_levels == 0 || self.lanczos_steps == 0 {
            return bad("max_iters, max_levels and lanczos_steps must be positive".into());
        }
        if !(0.0..1.0).contains(&self.theta) {
            return bad(format!("theta must lie in [0, 1), got {}", self.theta));
        }
        if self.cycles.iter().any(|c| c.k == 0) {
            return bad("cycle k must be at least 1".into());
        }
        Ok(())
    }

    pub fn hierarchy_config(&self) -> HierarchyConfig {
        HierarchyConfig {
            scheme: self.aggregation,
            theta: self.theta,
            coarsest_size: self.coarsest_size,
            max_levels: self.max_levels,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Solved(SolveStatus),
    /// Setup or solve failed before an iteration count was available.
    Failed(String),
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowStatus::Solved(s) => s.fmt(f),
            RowStatus::Failed(_) => f.write_str("failed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub example: Example,
    pub m: usize,
    pub cycle: CycleSpec,
    pub iterations: usize,
    pub avg_factor: f64,
    pub status: RowStatus,
}

impl ResultRow {
    /// Markdown cell: `factor (iters)`, `-` for divergence.
    pub fn cell(&self) -> String {
        match &self.status {
            RowStatus::Solved(SolveStatus::Diverged) => "-".to_string(),
            RowStatus::Solved(_) => format!("{:.6} ({})", self.avg_factor, self.iterations),
            RowStatus::Failed(_) => "failed".to_string(),
        }
    }
}

/// Solves one configuration on a prepared hierarchy.
pub fn run_one(
    hierarchy: &Hierarchy,
    cycle: CycleSpec,
    config: &ExperimentConfig,
) -> Result<(usize, f64, SolveStatus)> {
    let a = hierarchy.matrix(0);
    let b = rhs_for(a, &true_solution(a.n_rows()))?;
    let cycle = cycle.with_exact_coarsest(config.exact_coarsest);
    let mg = Multigrid::with_estimation(hierarchy, cycle, config.lanczos_steps, config.seed)?;
    let options = SolveOptions {
        tol: config.tol,
        max_iters: config.max_iters,
    };
    let (_, report) = stationary_solve(a, &mg, &b, options)?;
    Ok((report.iterations, report.avg_factor, report.status))
}

/// Runs every combination in the order examples × m × cycles. Each
/// (example, m) hierarchy is built once and shared by its cycles.
pub fn run_suite(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    if config.cycles.is_empty() {
        return Ok(Vec::new());
    }
    let problems: Vec<(Example, usize)> = config
        .examples
        .iter()
        .flat_map(|&e| config.ms.iter().map(move |&m| (e, m)))
        .collect();
    let hcfg = config.hierarchy_config();
    let hierarchies: Vec<std::result::Result<Hierarchy, String>> = problems
        .par_iter()
        .map(|&(example, m)| {
            let a = assemble(&ProblemSpec::new(example, m).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            Hierarchy::build(a, &hcfg).map_err(|e| e.to_string())
        })
        .collect();
    let jobs: Vec<(usize, CycleSpec)> = (0..problems.len())
        .flat_map(|p| config.cycles.iter().map(move |&c| (p, c)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(p, cycle)| {
            let (example, m) = problems[p];
            let outcome = match &hierarchies[p] {
                Ok(h) => run_one(h, cycle, config).map_err(|e| e.to_string()),
                Err(e) => Err(e.clone()),
            };
            let (iterations, avg_factor, status) = match outcome {
                Ok((it, f, s)) => (it, f, RowStatus::Solved(s)),
                Err(msg) => (0, f64::NAN, RowStatus::Failed(msg)),
            };
            ResultRow {
                example,
                m,
                cycle,
                iterations,
                avg_factor,
                status,
            }
        })
        .collect();
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Markdown,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            other => Err(Error::InvalidArgument(format!("unknown format '{other}'"))),
        }
    }
}

pub fn emit(rows: &[ResultRow], format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => emit_csv(rows),
        OutputFormat::Markdown => emit_markdown(rows),
    }
}

fn emit_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from("example,m,cycle,k,bounds,iters,factor,status\n");
    for r in rows {
        let bounds = match r.cycle.kind {
            CycleKind::TwoGrid => String::new(),
            _ => r.cycle.bounds.to_string(),
        };
        // Bounds contain a comma; quote them.
        let _ = writeln!(
            out,
            "{},{},{},{},\"{}\",{},{:.6},{}",
            r.example, r.m, r.cycle.kind, r.cycle.k, bounds, r.iterations, r.avg_factor, r.status
        );
    }
    out
}

fn method_label(c: &CycleSpec) -> String {
    let name = match c.kind {
        CycleKind::TwoGrid => return "Two-grid".to_string(),
        CycleKind::KV => "kV-cycle",
        CycleKind::Amli => "AMLI-cycle",
        CycleKind::K => "K-cycle",
        CycleKind::H => "H-cycle",
        CycleKind::N => "N-cycle",
    };
    if !c.kind.uses_bounds() {
        return name.to_string();
    }
    match c.bounds {
        BoundPolicy::EstimatePerLevel => format!("{name} (estimate lambda_min)"),
        BoundPolicy::Fixed(b) => format!("{name} (lambda_min = {})", b.lambda_min),
    }
}

/// One table per example; rows grouped by method, one column per `m`.
fn emit_markdown(rows: &[ResultRow]) -> String {
    let mut out = String::new();
    let mut examples: Vec<Example> = Vec::new();
    for r in rows {
        if !examples.contains(&r.example) {
            examples.push(r.example);
        }
    }
    for example in examples {
        let subset: Vec<&ResultRow> = rows.iter().filter(|r| r.example == example).collect();
        let mut ms: Vec<usize> = subset.iter().map(|r| r.m).collect();
        ms.sort_unstable();
        ms.dedup();
        // Keep the first-seen order of (method, k) rows.
        let mut keys: Vec<(String, usize)> = Vec::new();
        let mut cells: BTreeMap<(String, usize, usize), String> = BTreeMap::new();
        for r in &subset {
            let key = (method_label(&r.cycle), r.cycle.k);
            if !keys.contains(&key) {
                keys.push(key.clone());
            }
            cells.insert((key.0, key.1, r.m), r.cell());
        }
        let _ = writeln!(out, "### {example}\n");
        let _ = write!(out, "| method | k |");
        for m in &ms {
            let _ = write!(out, " h=1/{m} |");
        }
        out.push('\n');
        out.push_str("|---|---|");
        for _ in &ms {
            out.push_str("---|");
        }
        out.push('\n');
        for (label, k) in keys {
            let k_cell = if label == "Two-grid" {
                String::new()
            } else {
                k.to_string()
            };
            let _ = write!(out, "| {label} | {k_cell} |");
            for &m in &ms {
                let cell = cells
                    .get(&(label.clone(), k, m))
                    .map(String::as_str)
                    .unwrap_or("");
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
