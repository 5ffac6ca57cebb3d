#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use hbm::sphere::{build_basis, build_grid, degree_order, n_coeffs};
use hbm::{HbmError, SphereGrid};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

#[test]
fn grid_examples() {
    let g2 = build_grid::<f64>(2, 256).unwrap();
    assert_eq!(g2.len(), 256);
    assert!(rel(g2.weights().iter().sum(), 2.0 * PI) < 1e-12);
    let g3 = build_grid::<f64>(3, 64).unwrap();
    assert_eq!(g3.len(), 64 * 128);
    assert!(rel(g3.weights().iter().sum(), 4.0 * PI) < 1e-12);
    assert!(matches!(build_grid::<f64>(3, 3), Err(HbmError::ResolutionTooLow(3))));
    assert!(matches!(
        build_grid::<f64>(4, 16),
        Err(HbmError::UnsupportedDimension(4))
    ));
}

#[test]
fn integrates_moments() {
    let g = grid(3);
    let x2 = g.integrate_with(|k| g.nodes()[k][0].powi(2));
    assert!(rel(x2, 4.0 * PI / 3.0) < 1e-12);
    let xy = g.integrate_with(|k| g.nodes()[k][0] * g.nodes()[k][1]);
    assert!(xy.abs() < 1e-13);
}

#[test]
fn circle_basis_is_fourier() {
    let g = grid_at(2, 16);
    let b = build_basis(&g, 2).unwrap();
    assert_eq!(b.len(), 5);
    for (k, theta) in g.nodes().iter().enumerate() {
        let t = theta[1].atan2(theta[0]);
        let expect = [
            1.0 / (2.0 * PI).sqrt(),
            t.sin() / PI.sqrt(),
            t.cos() / PI.sqrt(),
            (2.0 * t).sin() / PI.sqrt(),
            (2.0 * t).cos() / PI.sqrt(),
        ];
        for (a, e) in expect.iter().enumerate() {
            assert!((b.values[(k, a)] - e).abs() < 1e-12);
        }
    }
}

/// Gram matrices of values and of gradients, the latter being the
/// weak form of the round Laplacian.
fn gram_checks(g: &SphereGrid, degree: usize) {
    let b = build_basis(g, degree).unwrap();
    let dim = g.dim();
    let w = g.weights();
    for a in 0..b.len() {
        for c in 0..b.len() {
            let mut m = 0.0;
            let mut s = 0.0;
            for k in 0..g.len() {
                m += w[k] * b.values[(k, a)] * b.values[(k, c)];
                s += w[k] * b.grad[0][(k, a)] * b.grad[0][(k, c)];
                if dim == 3 {
                    s += w[k] * b.grad[1][(k, a)] * b.grad[1][(k, c)];
                }
            }
            let l = b.degrees[a] as f64;
            let delta = if a == c { 1.0 } else { 0.0 };
            assert!((m - delta).abs() < 1e-10, "mass ({a},{c}) = {m}");
            assert!(
                (s - l * (l + dim as f64 - 2.0) * delta).abs() < 1e-8,
                "stiffness ({a},{c}) = {s}"
            );
        }
    }
}

#[test]
fn basis_gram_and_laplacian() {
    gram_checks(&grid_at(2, 64), 16);
    gram_checks(&grid_at(3, 24), 10);
}

#[test]
fn basis_is_round_laplacian_eigenbasis() {
    let g = grid_at(3, 24);
    let b = build_basis(&g, 8).unwrap();
    for a in 0..b.len() {
        let l = b.degrees[a] as f64;
        for k in 0..g.len() {
            let lap = b.hess[0][(k, a)] + b.hess[2][(k, a)];
            assert!((lap + l * (l + 1.0) * b.values[(k, a)]).abs() < 1e-8);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn antipodal_quadrature(seed in any::<u64>(), dim in 2usize..=3) {
        let g = grid_at(dim, if dim == 2 { 64 } else { 16 });
        let mut r = rng(seed);
        let c: Vec<f64> = (0..n_coeffs(dim, 7)).map(|_| r.random_range(-1.0..1.0)).collect();
        let v = g.synthesize_values(&c).unwrap();
        let flipped: Vec<f64> = (0..g.len()).map(|k| v[g.antipode(k)]).collect();
        let scale: f64 = v.iter().zip(g.weights()).map(|(x, w)| (x * w).abs()).sum();
        // Same terms in a different summation order.
        prop_assert!((g.integrate(&v) - g.integrate(&flipped)).abs() <= 1e-14 * scale);
        for k in 0..g.len() {
            prop_assert_eq!(g.weights()[k], g.weights()[g.antipode(k)]);
        }
    }

    #[test]
    fn analysis_inverts_synthesis(seed in any::<u64>(), dim in 2usize..=3) {
        let g = grid_at(dim, if dim == 2 { 64 } else { 16 });
        let degree = g.max_exact_degree();
        let mut r = rng(seed);
        let c: Vec<f64> = (0..n_coeffs(dim, degree)).map(|_| r.random_range(-1.0..1.0)).collect();
        let back = g.analyze(&g.synthesize_values(&c).unwrap(), degree).unwrap();
        for (x, y) in c.iter().zip(&back) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn point_evaluation_matches_nodes(seed in any::<u64>(), dim in 2usize..=3) {
        let g = grid_at(dim, 16);
        let mut r = rng(seed);
        let c: Vec<f64> = (0..n_coeffs(dim, 6)).map(|_| r.random_range(-1.0..1.0)).collect();
        let v = g.synthesize_values(&c).unwrap();
        let k = r.random_range(0..g.len());
        prop_assert!((g.eval_dir(&c, &g.nodes()[k]).unwrap() - v[k]).abs() < 1e-12);
    }

    #[test]
    fn parity_follows_degree(seed in any::<u64>()) {
        let g = grid_at(3, 16);
        let b = build_basis(&g, 6).unwrap();
        let mut r = rng(seed);
        let a = r.random_range(0..b.len());
        let sign = if degree_order(3, a).0.is_multiple_of(2) { 1.0 } else { -1.0 };
        prop_assert_eq!(b.is_even(a), sign > 0.0);
        for k in 0..g.len() {
            prop_assert!((b.values[(g.antipode(k), a)] - sign * b.values[(k, a)]).abs() < 1e-12);
        }
    }
}
