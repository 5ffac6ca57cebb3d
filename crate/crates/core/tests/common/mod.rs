//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use hbm::body::StandardBody;
use hbm::sphere::{default_degree, default_resolution, degree_order, n_coeffs};
use hbm::{Body, Field, Spectral, SphereGrid};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn default_grid_cell(dim: usize) -> &'static OnceLock<Arc<SphereGrid>> {
    static G2: OnceLock<Arc<SphereGrid>> = OnceLock::new();
    static G3: OnceLock<Arc<SphereGrid>> = OnceLock::new();
    if dim == 2 {
        &G2
    } else {
        &G3
    }
}

/// Grid at the default resolution, shared across tests.
pub fn grid(dim: usize) -> Arc<SphereGrid> {
    default_grid_cell(dim)
        .get_or_init(|| Arc::new(SphereGrid::new(dim, default_resolution(dim)).unwrap()))
        .clone()
}

pub fn grid_at(dim: usize, resolution: usize) -> Arc<SphereGrid> {
    Arc::new(SphereGrid::new(dim, resolution).unwrap())
}

pub fn spectral(dim: usize) -> Spectral {
    Spectral::new(grid(dim), default_degree(dim)).unwrap()
}

pub fn ball(g: &Arc<SphereGrid>, radius: f64) -> Body {
    Body::standard(g.clone(), &StandardBody::Ball { radius }).unwrap()
}

pub fn random_unit(dim: usize, r: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(dim) {
            *c = r.sample(StandardNormal);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Random orthogonal matrix from the QR factors of a Gaussian matrix.
pub fn random_rotation(dim: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| r.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// `R diag(exp(u_i))` with `u_i` uniform in `(-ln 2, ln 2)`, so the ratio of
/// semi-axes is at most 4.
pub fn random_ellipsoid_matrix(dim: usize, r: &mut ChaCha8Rng) -> DMatrix<f64> {
    let rot = random_rotation(dim, r);
    let ln2 = std::f64::consts::LN_2;
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |_, _| r.random_range(-ln2..ln2).exp()));
    rot * d
}

pub fn ellipsoid(g: &Arc<SphereGrid>, a: &DMatrix<f64>) -> Body {
    let dim = g.dim();
    let matrix: Vec<f64> = (0..dim * dim).map(|k| a[(k / dim, k % dim)]).collect();
    Body::standard(g.clone(), &StandardBody::Ellipsoid { matrix }).unwrap()
}

/// Random even coefficient vector up to `degree`, decaying like `1/(1+l)^2`.
pub fn random_even_coeffs(dim: usize, degree: usize, scale: f64, r: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n_coeffs(dim, degree))
        .map(|i| {
            let l = degree_order(dim, i).0;
            if l % 2 == 1 {
                0.0
            } else {
                scale * r.sample::<f64, _>(StandardNormal) / ((1 + l) * (1 + l)) as f64
            }
        })
        .collect()
}

pub fn random_even_field(g: &SphereGrid, degree: usize, scale: f64, r: &mut ChaCha8Rng) -> Field {
    g.synthesize(&random_even_coeffs(g.dim(), degree, scale, r)).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

pub struct Member {
    pub label: String,
    pub body: Body,
    pub ellipsoid: bool,
}

pub const ROUNDED: [(f64, f64); 5] = [(6.0, 0.15), (4.0, 0.1), (8.0, 0.2), (3.0, 0.1), (2.5, 0.05)];
pub const RANDOM_EVEN_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
pub const ELLIPSOID_SEEDS: [u64; 5] = [11, 12, 13, 14, 15];

fn build_suite(dim: usize) -> Vec<Member> {
    let g = grid(dim);
    let mut out = vec![Member {
        label: "ball".into(),
        body: ball(&g, 1.0),
        ellipsoid: true,
    }];
    for s in ELLIPSOID_SEEDS {
        let a = random_ellipsoid_matrix(dim, &mut rng(s));
        out.push(Member {
            label: format!("ellipsoid#{s}"),
            body: ellipsoid(&g, &a),
            ellipsoid: true,
        });
    }
    for s in RANDOM_EVEN_SEEDS {
        let body = Body::standard(
            g.clone(),
            &StandardBody::RandomEven {
                seed: s,
                amplitude: 0.2,
            },
        )
        .unwrap_or_else(|e| panic!("random_even seed {s} dim {dim}: {e}"));
        out.push(Member {
            label: format!("random_even#{s}"),
            body,
            ellipsoid: false,
        });
    }
    for (q, eps) in ROUNDED {
        let body = Body::standard(g.clone(), &StandardBody::RoundedLq { q, eps })
            .unwrap_or_else(|e| panic!("rounded_lq({q},{eps}) dim {dim}: {e}"));
        out.push(Member {
            label: format!("rounded_lq({q},{eps})"),
            body,
            ellipsoid: false,
        });
    }
    out
}

/// Ball, 5 random ellipsoids, 5 random_even and 5 rounded_lq bodies.
pub fn suite(dim: usize) -> &'static [Member] {
    static S2: OnceLock<Vec<Member>> = OnceLock::new();
    static S3: OnceLock<Vec<Member>> = OnceLock::new();
    let cell = if dim == 2 { &S2 } else { &S3 };
    cell.get_or_init(|| build_suite(dim))
}

/// The suite in both dimensions.
pub fn full_suite() -> impl Iterator<Item = &'static Member> {
    suite(2).iter().chain(suite(3).iter())
}
