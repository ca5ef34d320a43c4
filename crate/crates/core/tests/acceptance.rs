//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion
//! and exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use common::{
    a_norm, ba_extremes, densify, jacobi, log_uniform_spectrum, max_abs, poisson_hierarchy,
    poly_of_ba, rng, spd_with_spectrum, to_sparse,
};
use mgcycles::accel::{chebyshev_apply, heavy_ball_apply, nesterov_apply};
use mgcycles::bench::{format_cycle, parse_cycle, run_suite, ExperimentConfig, ResultRow, RowStatus};
use mgcycles::cycle::{CycleKind, CycleSpec, Multigrid, SolveStatus};
use mgcycles::poly::{
    cheb_t, hb_bound, na_bound, solve_threshold, uniform_grid, Family, PolynomialSpec,
    ThresholdFamily,
};
use mgcycles::sparse::norm2;
use mgcycles::{
    Example, InitialStep, MomentumOptions, NesterovForm, Preconditioner, SparseMatrix, SpectralBounds,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// The reference values are the rounded ones, not 1/√2.
#[allow(clippy::approx_constant)]
fn criterion_1() -> Outcome {
    let h = solve_threshold(ThresholdFamily::HeavyBall, 2).map_err(|e| e.to_string())?;
    let n = solve_threshold(ThresholdFamily::Nesterov, 2).map_err(|e| e.to_string())?;
    check(
        (h.delta_tg - 0.5464).abs() <= 5e-4 && (n.delta_tg - 0.7071).abs() <= 5e-4,
        format!("H k=2 delta_TG = {:.6}, N k=2 delta_TG = {:.6}", h.delta_tg, n.delta_tg),
    )
}

struct DenseSystem {
    a: SparseMatrix,
    ad: DMatrix<f64>,
    b: SparseMatrix,
    b_diag: Vec<f64>,
    bounds: SpectralBounds,
}

fn dense_system(n: usize, seed: u64, lo: f64) -> DenseSystem {
    let mut r = rng(seed);
    let eigs = log_uniform_spectrum(n, lo, 1.0, &mut r);
    let ad = spd_with_spectrum(&eigs, &mut r);
    let a = to_sparse(&ad);
    let b = jacobi(&a);
    let b_diag = b.diagonal();
    let (min, max) = ba_extremes(&ad, &b_diag);
    DenseSystem {
        a,
        ad,
        b,
        b_diag,
        bounds: SpectralBounds::new(min, max).unwrap(),
    }
}

fn criterion_2() -> Outcome {
    let options = MomentumOptions::default();
    let mut worst_hb = f64::NEG_INFINITY;
    let mut worst_na = f64::NEG_INFINITY;
    let mut checks = 0;
    for seed in 0..50u64 {
        let mut r = rng(1000 + seed);
        let n = r.gen_range(2..=30);
        let sys = dense_system(n, 2000 + seed, 1e-3);
        let x_star: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let rhs = sys.a.spmv(&x_star).unwrap();
        let e0 = a_norm(&sys.ad, &DVector::from_column_slice(&x_star));
        let kappa = sys.bounds.condition_number();
        for k in 1..=7 {
            let err = |x: Vec<f64>| {
                let e = DVector::from_iterator(n, x_star.iter().zip(&x).map(|(s, v)| s - v));
                a_norm(&sys.ad, &e) / e0
            };
            let hb = err(heavy_ball_apply(&sys.a, &sys.b, &rhs, k, sys.bounds, options).unwrap());
            let na = err(nesterov_apply(&sys.a, &sys.b, &rhs, k, sys.bounds, options).unwrap());
            worst_hb = worst_hb.max(hb - hb_bound(kappa, k).unwrap());
            worst_na = worst_na.max(na * na - na_bound(kappa, k).unwrap());
            checks += 2;
        }
    }
    check(
        worst_hb <= 1e-10 && worst_na <= 1e-10,
        format!(
            "{checks} iterate checks, max excess over bound: HB {worst_hb:.3e}, NA {worst_na:.3e}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut failures = Vec::new();
    let grid = uniform_grid(0.0, 1.0, 0.005).unwrap();
    let mut worst_identity = 0.0_f64;
    for lo in [0.0, 0.1] {
        for family in Family::ALL {
            if family == Family::HeavyBall && lo == 0.0 {
                continue;
            }
            let b = SpectralBounds::new(lo, 1.0).unwrap();
            for k in 0..=8 {
                let p = PolynomialSpec::new(family, k, b).unwrap();
                if (p.p_eval(0.0).unwrap() - 1.0).abs() > 1e-14 {
                    failures.push(format!("{family} k={k} p(0) != 1"));
                }
                if k == 0 {
                    continue;
                }
                let q = PolynomialSpec::new(family, k - 1, b).unwrap();
                for &x in &grid {
                    let r = (p.p_eval(x).unwrap() - 1.0 + x * q.q_eval(x).unwrap()).abs();
                    worst_identity = worst_identity.max(r);
                }
            }
        }
    }
    if worst_identity > 1e-12 {
        failures.push(format!("identity residual {worst_identity:e}"));
    }

    let fine: Vec<f64> = (0..2001).map(|i| 0.1 + 0.9 * i as f64 / 2000.0).collect();
    let b = SpectralBounds::new(0.1, 1.0).unwrap();
    for k in 2..=7 {
        let level = |family| {
            let p = PolynomialSpec::new(family, k, b).unwrap();
            fine.iter().map(|&x| p.p_eval(x).unwrap().abs()).fold(0.0, f64::max)
        };
        let cheb = level(Family::Chebyshev);
        if cheb > level(Family::HeavyBall) + 1e-12 || cheb > level(Family::Nesterov) + 1e-12 {
            failures.push(format!("min-max dominance fails at k={k}"));
        }
        debug_assert!((cheb - 1.0 / cheb_t(k, 1.0 / 0.9)).abs() < 1e-12);
    }

    let options = MomentumOptions {
        init: InitialStep::Polynomial,
        nesterov_form: NesterovForm::Consistent,
    };
    let mut worst_operator = 0.0_f64;
    for (seed, n) in [(31, 8), (32, 17), (33, 30)] {
        let sys = dense_system(n, seed, 1e-2);
        for family in Family::ALL {
            for k in 1..=7 {
                let mut bhat = DMatrix::zeros(n, n);
                let mut e = vec![0.0; n];
                for j in 0..n {
                    e[j] = 1.0;
                    let col = match family {
                        Family::Chebyshev => chebyshev_apply(&sys.a, &sys.b, &e, k, sys.bounds),
                        Family::HeavyBall => {
                            heavy_ball_apply(&sys.a, &sys.b, &e, k, sys.bounds, options)
                        }
                        Family::Nesterov => nesterov_apply(&sys.a, &sys.b, &e, k, sys.bounds, options),
                    }
                    .unwrap();
                    e[j] = 0.0;
                    bhat.set_column(j, &DVector::from_vec(col));
                }
                let err_op = DMatrix::identity(n, n) - bhat * &sys.ad;
                let p = PolynomialSpec::new(family, k, sys.bounds).unwrap();
                let expected = poly_of_ba(&p, &sys.ad, &sys.b_diag);
                let rel = max_abs(&(&err_op - &expected)) / max_abs(&expected).max(1.0);
                worst_operator = worst_operator.max(rel);
            }
        }
    }
    if worst_operator > 1e-10 {
        failures.push(format!("operator mismatch {worst_operator:e}"));
    }
    let detail = format!(
        "identity residual {worst_identity:.2e}, operator mismatch {worst_operator:.2e}{}",
        if failures.is_empty() {
            String::new()
        } else {
            format!("; {}", failures.join("; "))
        }
    );
    check(failures.is_empty(), detail)
}

fn criterion_4() -> Outcome {
    let h = poisson_hierarchy(8, 4);
    let mut specs = vec![CycleSpec::two_grid()];
    for k in 1..=3 {
        specs.push(CycleSpec::fixed(CycleKind::KV, k, 0.0).unwrap());
        specs.push(CycleSpec::fixed(CycleKind::Amli, k, 0.0).unwrap());
        specs.push(CycleSpec::fixed(CycleKind::H, k, 0.1).unwrap());
        specs.push(CycleSpec::fixed(CycleKind::N, k, 0.0).unwrap());
    }
    let mut failures = Vec::new();
    let mut worst_asym = 0.0_f64;
    let mut min_eig = f64::INFINITY;
    for spec in specs {
        let spec = spec.with_init(InitialStep::Preconditioned);
        let mg = Multigrid::new(&h, spec).map_err(|e| e.to_string())?;
        let b = densify(&mg);
        let asym = max_abs(&(&b - b.transpose())) / max_abs(&b);
        let ev = SymmetricEigen::new((&b + b.transpose()) * 0.5).eigenvalues.min();
        worst_asym = worst_asym.max(asym);
        min_eig = min_eig.min(ev);
        if asym > 1e-10 || ev <= 0.0 {
            failures.push(format_cycle(&spec));
        }
    }

    let n = h.matrix(0).n_rows();
    let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
    let y: Vec<f64> = (0..n).map(|i| ((i * i) as f64 * 0.11).cos()).collect();
    let sum: Vec<f64> = x.iter().zip(&y).map(|(u, v)| u + v).collect();
    let kc = Multigrid::new(&h, CycleSpec::fixed(CycleKind::K, 2, 0.0).unwrap()).unwrap();
    let (bx, by, bs) = (kc.apply(&x).unwrap(), kc.apply(&y).unwrap(), kc.apply(&sum).unwrap());
    let defect: Vec<f64> = bs.iter().zip(bx.iter().zip(&by)).map(|(s, (u, v))| s - u - v).collect();
    let k_defect = norm2(&defect) / norm2(&bx);
    if k_defect <= 1e-8 {
        failures.push("K-cycle passed the linearity probe".into());
    }
    check(
        failures.is_empty(),
        format!(
            "{} levels, max asymmetry {worst_asym:.1e}, min eigenvalue {min_eig:.3e}, \
             K-cycle additivity defect {k_defect:.1e}{}",
            h.num_levels(),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failing: {}", failures.join(", "))
            }
        ),
    )
}

const MS: [usize; 3] = [64, 128, 256];

fn poisson_rows() -> &'static [ResultRow] {
    static ROWS: OnceLock<Vec<ResultRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let config = ExperimentConfig::parse(
            "examples = poisson\n\
             m = 64, 128, 256\n\
             cycles = tg; kv:1; k:2; k:3; n:2; n:3; n:7; h:3; amli:3; amli:7; \
             h:3:fixed:0.1,1; h:4:fixed:0.1,1; h:5:fixed:0.1,1; h:6:fixed:0.1,1; h:7:fixed:0.1,1\n",
        )
        .unwrap();
        run_suite(&config).unwrap()
    })
}

fn other_rows() -> &'static [ResultRow] {
    static ROWS: OnceLock<Vec<ResultRow>> = OnceLock::new();
    ROWS.get_or_init(|| {
        let config =
            ExperimentConfig::parse("examples = jump, aniso\nm = 64, 128, 256\ncycles = n:2; kv:2\n")
                .unwrap();
        run_suite(&config).unwrap()
    })
}

fn find<'a>(rows: &'a [ResultRow], example: Example, m: usize, cycle: &str) -> &'a ResultRow {
    let spec = parse_cycle(cycle).unwrap();
    rows.iter()
        .find(|r| r.example == example && r.m == m && r.cycle == spec)
        .unwrap_or_else(|| panic!("no row for {example} m={m} {cycle}"))
}

fn converged(r: &ResultRow) -> bool {
    r.status == RowStatus::Solved(SolveStatus::Converged)
}

/// Converged at every m, with the iteration count for each m.
fn iterations(rows: &[ResultRow], example: Example, cycle: &str) -> Option<Vec<usize>> {
    MS.iter()
        .map(|&m| {
            let r = find(rows, example, m, cycle);
            converged(r).then_some(r.iterations)
        })
        .collect()
}

fn uniform(its: &[usize]) -> bool {
    let max = *its.iter().max().unwrap() as f64;
    let min = *its.iter().min().unwrap() as f64;
    max / min <= 1.3
}

fn fmt_its(its: &Option<Vec<usize>>) -> String {
    match its {
        Some(v) => v.iter().map(usize::to_string).collect::<Vec<_>>().join("/"),
        None => "not converged".into(),
    }
}

fn criterion_5() -> Outcome {
    let rows = poisson_rows();
    let p = Example::Poisson;
    let factors: Vec<f64> = MS.iter().map(|&m| find(rows, p, m, "tg").avg_factor).collect();
    let tg = iterations(rows, p, "tg");
    let ok_a = tg.as_deref().is_some_and(uniform) && factors.iter().all(|f| (f - 0.50).abs() <= 0.15);
    let kv = iterations(rows, p, "kv:1");
    let ok_b = kv.as_ref().is_some_and(|v| v[2] as f64 >= 1.15 * v[0] as f64);
    let mut ok_c = true;
    let mut detail_c = Vec::new();
    for k in [2, 3] {
        let n = iterations(rows, p, &format!("n:{k}"));
        let kc = iterations(rows, p, &format!("k:{k}"));
        let fewer = match (&n, &kc, &tg) {
            (Some(n), Some(kc), Some(tg)) => {
                n.iter().zip(kc).zip(tg).all(|((a, b), c)| a < b && a < c)
            }
            _ => false,
        };
        ok_c &= n.as_deref().is_some_and(uniform) && fewer;
        detail_c.push(format!("N k={k} {} vs K {}", fmt_its(&n), fmt_its(&kc)));
    }
    check(
        ok_a && ok_b && ok_c,
        format!(
            "(a) two-grid factors {:.3}/{:.3}/{:.3}, iterations {} [{}]; (b) kV k=1 {} [{}]; (c) {} [{}]",
            factors[0],
            factors[1],
            factors[2],
            fmt_its(&tg),
            if ok_a { "ok" } else { "fail" },
            fmt_its(&kv),
            if ok_b { "ok" } else { "fail" },
            detail_c.join(", "),
            if ok_c { "ok" } else { "fail" },
        ),
    )
}

fn criterion_6() -> Outcome {
    let rows = poisson_rows();
    let p = Example::Poisson;
    let statuses: Vec<String> = MS
        .iter()
        .map(|&m| find(rows, p, m, "h:3").status.to_string())
        .collect();
    let diverged = find(rows, p, 64, "h:3").status == RowStatus::Solved(SolveStatus::Diverged);
    let mut ok = diverged;
    let mut damped = Vec::new();
    for k in 3..=7 {
        let its = iterations(rows, p, &format!("h:{k}:fixed:0.1,1"));
        ok &= its.as_deref().is_some_and(uniform);
        damped.push(format!("k={k} {}", fmt_its(&its)));
    }
    check(
        ok,
        format!(
            "H lambda_min=0 k=3: {}; H lambda_min=0.1: {}",
            statuses.join("/"),
            damped.join(", ")
        ),
    )
}

fn criterion_7() -> Outcome {
    let rows = poisson_rows();
    let p = Example::Poisson;
    let mut ok = true;
    let mut detail = Vec::new();
    for m in MS {
        let (a3, a7) = (find(rows, p, m, "amli:3"), find(rows, p, m, "amli:7"));
        let (n3, n7) = (find(rows, p, m, "n:3"), find(rows, p, m, "n:7"));
        let amli_degrades = !converged(a7) || a7.iterations >= 3 * a3.iterations;
        let n_stable = converged(n3) && converged(n7) && n7.iterations <= 2 * n3.iterations;
        ok &= amli_degrades && n_stable;
        detail.push(format!(
            "m={m}: AMLI {}->{}, N {}->{}",
            a3.iterations, a7.iterations, n3.iterations, n7.iterations
        ));
    }
    check(ok, detail.join("; "))
}

fn criterion_8() -> Outcome {
    let rows = other_rows();
    let mut ok = true;
    let mut detail = Vec::new();
    for example in [Example::JumpDiffusion, Example::Anisotropic] {
        let n = iterations(rows, example, "n:2");
        let kv = iterations(rows, example, "kv:2");
        let better = match (&n, &kv) {
            (Some(n), Some(kv)) => n.iter().zip(kv).all(|(a, b)| a < b),
            (Some(_), None) => true,
            _ => false,
        };
        ok &= n.as_deref().is_some_and(uniform) && better;
        detail.push(format!("{example}: N k=2 {} vs kV k=2 {}", fmt_its(&n), fmt_its(&kv)));
    }
    check(ok, detail.join("; "))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("theory thresholds", criterion_1),
        ("momentum bounds", criterion_2),
        ("polynomial identities", criterion_3),
        ("operator structure", criterion_4),
        ("table trends, Poisson", criterion_5),
        ("H-cycle divergence", criterion_6),
        ("AMLI degradation", criterion_7),
        ("jump and anisotropic problems", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
