use mgcycles::poly::{
    cheb_t, curves_csv, hb_bound, na_bound, solve_threshold, uniform_grid, Family,
    PolynomialSpec, ThresholdFamily,
};
use mgcycles::SpectralBounds;
use proptest::prelude::*;

fn spec(family: Family, k: usize, lo: f64, hi: f64) -> PolynomialSpec {
    PolynomialSpec::new(family, k, SpectralBounds::new(lo, hi).unwrap()).unwrap()
}

fn families(lo: f64) -> Vec<Family> {
    Family::ALL
        .into_iter()
        .filter(|&f| lo > 0.0 || f != Family::HeavyBall)
        .collect()
}

/// Barycentric interpolation through the given nodes.
fn interpolate(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let w: Vec<f64> = (0..nodes.len())
        .map(|j| {
            1.0 / (0..nodes.len())
                .filter(|&m| m != j)
                .map(|m| nodes[j] - nodes[m])
                .product::<f64>()
        })
        .collect();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..nodes.len() {
        if x == nodes[j] {
            return values[j];
        }
        let t = w[j] / (x - nodes[j]);
        num += t * values[j];
        den += t;
    }
    num / den
}

proptest! {
    #[test]
    fn error_polynomials_fix_zero(k in 0usize..12, lo in 0.0..0.9f64, width in 0.05..2.0f64) {
        let hi = lo + width;
        for family in families(lo) {
            prop_assert!((spec(family, k, lo, hi).p_eval(0.0).unwrap() - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn p_is_one_minus_x_q(k in 1usize..9, lo in 0.0..0.9f64, x in 0.0..1.2f64) {
        for family in families(lo) {
            let p = spec(family, k, lo, 1.0).p_eval(x).unwrap();
            let q = spec(family, k - 1, lo, 1.0).q_eval(x).unwrap();
            prop_assert!((p - (1.0 - x * q)).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }
}

#[test]
fn identity_on_a_grid() {
    let grid = uniform_grid(0.0, 1.0, 0.005).unwrap();
    for lo in [0.0, 0.1] {
        for family in families(lo) {
            for k in 1..=8 {
                let p = spec(family, k, lo, 1.0);
                let q = spec(family, k - 1, lo, 1.0);
                let worst = grid
                    .iter()
                    .map(|&x| (p.p_eval(x).unwrap() - 1.0 + x * q.q_eval(x).unwrap()).abs())
                    .fold(0.0, f64::max);
                assert!(worst <= 1e-12, "{family} k={k} lo={lo}: {worst:e}");
            }
        }
    }
}

#[test]
fn degree_is_at_most_k() {
    let grid = uniform_grid(0.0, 1.0, 0.01).unwrap();
    for lo in [0.0, 0.1] {
        for family in families(lo) {
            for k in 0..=7 {
                let p = spec(family, k, lo, 1.0);
                let nodes: Vec<f64> = (0..=k)
                    .map(|j| {
                        let t = ((2 * j + 1) as f64 * std::f64::consts::PI / (2 * (k + 1)) as f64).cos();
                        0.5 * (1.0 + t)
                    })
                    .collect();
                let values: Vec<f64> = nodes.iter().map(|&x| p.p_eval(x).unwrap()).collect();
                for &x in &grid {
                    let r = (interpolate(&nodes, &values, x) - p.p_eval(x).unwrap()).abs();
                    assert!(r <= 1e-9, "{family} k={k}: {r:e} at {x}");
                }
            }
        }
    }
}

#[test]
fn chebyshev_dominates_on_its_interval() {
    let grid: Vec<f64> = (0..2001).map(|i| 0.1 + 0.9 * i as f64 / 2000.0).collect();
    for k in 2..=7 {
        let max_abs = |family| {
            let p = spec(family, k, 0.1, 1.0);
            grid.iter().map(|&x| p.p_eval(x).unwrap().abs()).fold(0.0, f64::max)
        };
        let cheb = max_abs(Family::Chebyshev);
        // The recurrence with ρ = 0.9 levels out at 1/C_k(1/ρ), reached at x = 0.1.
        let expected = 1.0 / cheb_t(k, 1.0 / 0.9);
        assert!((cheb - expected).abs() <= 1e-12, "k={k}: {cheb} vs {expected}");
        assert!(cheb <= max_abs(Family::HeavyBall) + 1e-12, "k={k}");
        assert!(cheb <= max_abs(Family::Nesterov) + 1e-12, "k={k}");
    }
}

#[test]
fn nesterov_q_approaches_inverse() {
    let grid = uniform_grid(0.2, 1.0, 0.01).unwrap();
    let err = |k| {
        let q = spec(Family::Nesterov, k, 0.2, 1.0);
        grid.iter()
            .map(|&x| (q.q_eval(x).unwrap() - 1.0 / x).abs())
            .fold(0.0, f64::max)
    };
    let errs: Vec<f64> = (4..=16).step_by(4).map(err).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!(errs[errs.len() - 1] < 0.1);
}

#[test]
fn worked_examples() {
    assert_eq!(cheb_t(0, 0.3), 1.0);
    assert_eq!(cheb_t(2, 0.5), -0.5);
    for k in 0..=10 {
        assert_eq!(cheb_t(k, 1.0), 1.0);
    }
    let hb = spec(Family::HeavyBall, 1, 0.1, 1.0);
    assert!((hb.p_eval(0.1).unwrap() - 0.45).abs() < 1e-15);
    assert!((spec(Family::HeavyBall, 0, 0.1, 1.0).q_eval(0.7).unwrap() - 5.5).abs() < 1e-15);
    for k in 1..6 {
        let na = spec(Family::Nesterov, k, 0.4, 0.4);
        for x in [0.1, 0.3, 0.9] {
            let want = (1.0 - x / 0.4f64).powi(k as i32);
            assert!((na.p_eval(x).unwrap() - want).abs() < 1e-14);
        }
    }
    assert!(PolynomialSpec::new(Family::HeavyBall, 2, SpectralBounds::default()).is_err());
}

#[test]
fn bound_factors() {
    assert!((hb_bound(4.0, 2).unwrap() - 0.5).abs() < 1e-15);
    for k in 1..5 {
        assert_eq!(hb_bound(1.0, k).unwrap(), 0.0);
        assert_eq!(na_bound(1.0, k).unwrap(), 0.0);
    }
    assert!((na_bound(4.0, 3).unwrap() - 0.25).abs() < 1e-15);
    assert!(hb_bound(0.5, 2).is_err());
    assert!(na_bound(f64::INFINITY, 2).is_err());
}

#[test]
fn thresholds() {
    let h = solve_threshold(ThresholdFamily::HeavyBall, 2).unwrap();
    assert!((h.delta_tg - 0.5464).abs() < 5e-4);
    let n = solve_threshold(ThresholdFamily::Nesterov, 2).unwrap();
    assert!((n.delta_tg - 0.5f64.sqrt()).abs() < 1e-9);
    let limit = ThresholdFamily::HeavyBall.admissible_limit(2);
    assert!((limit - (2.0 * 2f64.sqrt() - 2.0)).abs() < 1e-12);
    // Literal square-root form of the N-cycle factor.
    let s = solve_threshold(ThresholdFamily::NesterovSqrt, 2).unwrap();
    assert!((s.delta_tg - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-9);
    for family in [ThresholdFamily::HeavyBall, ThresholdFamily::Nesterov] {
        let mut last = 0.0;
        for k in 2..=7 {
            let r = solve_threshold(family, k).unwrap();
            assert!(r.residual <= 1e-10);
            assert!(r.delta_tg > last && r.delta_tg < 1.0, "{family} k={k}");
            last = r.delta_tg;
        }
    }
    assert!(solve_threshold(ThresholdFamily::HeavyBall, 1).is_err());
}

#[test]
fn curve_csv_layout() {
    let grid = uniform_grid(0.0, 1.0, 0.005).unwrap();
    assert_eq!(grid.len(), 201);
    let with_hb = curves_csv(3, SpectralBounds::new(0.1, 1.0).unwrap(), &grid).unwrap();
    let mut lines = with_hb.lines();
    assert_eq!(lines.next(), Some("x,p_cheb,p_hb,p_na"));
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|c| c.parse().unwrap())
        .collect();
    assert_eq!(first, vec![0.0, 1.0, 1.0, 1.0]);
    let without_hb = curves_csv(3, SpectralBounds::default(), &grid).unwrap();
    let row = without_hb.lines().nth(5).unwrap();
    assert_eq!(row.split(',').nth(2), Some(""));
}
