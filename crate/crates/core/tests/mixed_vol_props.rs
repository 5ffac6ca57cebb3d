mod common;

use common::*;
use hbm::mixed_vol::{minkowski2_gap, minkowski2_scale, mixed_volume, v1, v2, vk_bilinear, vk_mixed};
use hbm::{Field, HbmError};
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

fn entries_for(dim: usize, fields: &[Field]) -> Vec<&Field> {
    fields.iter().take(dim).collect()
}

#[test]
fn ball_and_scaling_examples() {
    let g = grid(3);
    let b = ball(&g, 1.0);
    let mv = mixed_volume(&g, &[b.h(), b.h(), b.h()]).unwrap();
    assert!(rel(mv.value, 4.0 * PI / 3.0) < 1e-12);
    for m in full_suite() {
        let k = &m.body;
        let two = k.h().scale(2.0);
        let mut entries = vec![&two];
        entries.extend(std::iter::repeat_n(k.h(), k.dim() - 1));
        let mv = mixed_volume(k.grid(), &entries).unwrap();
        assert!(rel(mv.value, 2.0 * k.volume()) < 1e-10, "{}", m.label);
    }
}

#[test]
fn vk_examples() {
    let g = grid(3);
    let b = ball(&g, 1.0);
    let lin = b.lin(&[0.0, 0.0, 1.0]);
    let lin2 = lin.powi(2);
    assert!(rel(vk_mixed(&b, &lin2, 2).unwrap(), -4.0 * PI / 45.0) < 1e-10);
    let mut r = rng(40);
    for m in full_suite() {
        let k = &m.body;
        let one = Field::constant(k.grid().len(), 1.0);
        assert!(rel(vk_mixed(k, &one, 2).unwrap(), k.volume()) < 1e-10);
        let f = random_even_field(k.grid(), 6, 1.0, &mut r);
        let dv = k.cone_volume_density();
        let direct = k.grid().integrate_with(|i| f.0[i].v * dv[i]);
        assert!((vk_mixed(k, &f, 1).unwrap() - direct).abs() < 1e-10 * direct.abs().max(1.0));
    }
    assert!(matches!(vk_mixed(&b, &lin2, 3), Err(HbmError::InvalidSpec(_))));
    assert!(matches!(
        mixed_volume(&g, &[b.h(), b.h()]),
        Err(HbmError::DimensionMismatch { expected: 3, got: 2 })
    ));
}

#[test]
fn minkowski_second_inequality() {
    for dim in [2, 3] {
        let s = suite(dim);
        for k in s {
            let self_gap = minkowski2_gap(&k.body, &k.body).unwrap();
            assert!(self_gap.abs() < 1e-10 * minkowski2_scale(&k.body, &k.body));
            let ck = k.body.scaled(1.7).unwrap();
            assert!(minkowski2_gap(&k.body, &ck).unwrap().abs() < 1e-10 * minkowski2_scale(&k.body, &ck));
            for l in s {
                let gap = minkowski2_gap(&k.body, &l.body).unwrap();
                assert!(
                    gap >= -1e-9 * minkowski2_scale(&k.body, &l.body),
                    "{} {}: {gap}",
                    k.label,
                    l.label
                );
            }
        }
    }
}

#[test]
fn first_mixed_volume_matches_polarization() {
    for dim in [2, 3] {
        let s = suite(dim);
        for k in s.iter().step_by(3) {
            for l in s.iter().step_by(4) {
                let mut entries = vec![l.body.h()];
                entries.extend(std::iter::repeat_n(k.body.h(), dim - 1));
                let mv = mixed_volume(k.body.grid(), &entries).unwrap().value;
                assert!(rel(mv, v1(&k.body, &l.body)) < 1e-10);
                let w = l.body.h().div(k.body.h());
                assert!(rel(vk_bilinear(&k.body, &w, &w).unwrap(), v2(&k.body, &l.body).unwrap()) < 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn permutation_symmetry(seed in any::<u64>(), dim in 2usize..=3) {
        let g = grid(dim);
        let mut r = rng(seed);
        let fields: Vec<Field> = (0..3).map(|_| random_even_field(&g, 8, 1.0, &mut r).add_constant(1.0)).collect();
        let mv = mixed_volume(&g, &entries_for(dim, &fields)).unwrap();
        prop_assert!(mv.asymmetry < 1e-8, "asymmetry {}", mv.asymmetry);
    }

    #[test]
    fn multilinearity(seed in any::<u64>(), dim in 2usize..=3) {
        let g = grid(dim);
        let mut r = rng(seed);
        let fields: Vec<Field> = (0..3).map(|_| random_even_field(&g, 8, 1.0, &mut r).add_constant(1.0)).collect();
        let extra = random_even_field(&g, 8, 1.0, &mut r);
        let a: f64 = r.random_range(-2.0..2.0);
        let slot = r.random_range(0..dim);
        let combined = fields[slot].add(&extra.scale(a));
        let mut e0 = entries_for(dim, &fields);
        let base = mixed_volume(&g, &e0).unwrap().value;
        e0[slot] = &extra;
        let other = mixed_volume(&g, &e0).unwrap().value;
        e0[slot] = &combined;
        let sum = mixed_volume(&g, &e0).unwrap().value;
        let scale = base.abs() + (a * other).abs();
        prop_assert!((sum - base - a * other).abs() < 1e-9 * scale);
    }

    #[test]
    fn second_inequality_against_random_ellipsoids(seed in any::<u64>(), dim in 2usize..=3) {
        let g = grid(dim);
        let b = ball(&g, 1.0);
        let e = ellipsoid(&g, &random_ellipsoid_matrix(dim, &mut rng(seed)));
        prop_assert!(minkowski2_gap(&b, &e).unwrap() >= -1e-9 * minkowski2_scale(&b, &e));
        prop_assert!(minkowski2_gap(&e, &b).unwrap() >= -1e-9 * minkowski2_scale(&e, &b));
    }
}
