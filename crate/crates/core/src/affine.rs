//! `Gamma_{-p}` gauges and the `S_2`-isotropic position.

use nalgebra::DMatrix;

use crate::body::Body;
use crate::error::{HbmError, Result};
use crate::linalg::spd_power;
use crate::scalar::{cast, lit, to_f64, Real};
use crate::sphere::Vec3;

pub const DEFAULT_ISOTROPY_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;

#[derive(Clone, Debug)]
pub struct IsotropyReport<T: Real> {
    /// `Q_uv = int <theta, u> <theta, v> dS_2 K`.
    pub moment_matrix: DMatrix<T>,
    /// `||Q - (tr Q / n) I||_F / (tr Q / n)`.
    pub defect: T,
    /// Accumulated map with unit determinant.
    pub transform: DMatrix<T>,
    pub iterations: usize,
    pub defect_trace: Vec<T>,
}

/// `||x||_{Gamma_{-p} K} = ((n / V(K)) int |lin_{K,x}|^p dV_K)^{1/p}`.
pub fn gamma_gauge<T: Real>(k: &Body<T>, p: T, x: &Vec3<T>) -> Result<T> {
    if x.iter().all(|&c| c == T::zero()) {
        return Err(HbmError::ZeroVector);
    }
    let h = k.h_values();
    let dv = k.cone_volume_density();
    let g = k.grid();
    let integral = g.integrate_with(|i| {
        let t = g.nodes()[i];
        ((t[0] * x[0] + t[1] * x[1] + t[2] * x[2]) / h[i]).abs().powf(p) * dv[i]
    });
    Ok((cast::<T>(k.dim()) / k.volume() * integral).powf(T::one() / p))
}

/// Second-moment matrix of `S_2 K`, whose density is `det(D^2 h) / h`.
pub fn s2_moment_matrix<T: Real>(k: &Body<T>) -> DMatrix<T> {
    let dim = k.dim();
    let g = k.grid();
    let h = k.h_values();
    let det = k.curvature_det();
    DMatrix::from_fn(dim, dim, |u, v| {
        g.integrate_with(|i| {
            let t = g.nodes()[i];
            t[u] * t[v] * det[i] / h[i]
        })
    })
}

pub fn isotropy_defect_of<T: Real>(q: &DMatrix<T>) -> T {
    let n = q.nrows();
    let mean = q.trace() / cast(n);
    (q - DMatrix::identity(n, n) * mean).norm() / mean
}

pub fn isotropy_defect<T: Real>(k: &Body<T>) -> IsotropyReport<T> {
    let q = s2_moment_matrix(k);
    let defect = isotropy_defect_of(&q);
    IsotropyReport {
        moment_matrix: q,
        defect,
        transform: DMatrix::identity(k.dim(), k.dim()),
        iterations: 0,
        defect_trace: vec![defect],
    }
}

fn unit_det<T: Real>(m: DMatrix<T>) -> DMatrix<T> {
    let n = m.nrows();
    let d = m.determinant().abs();
    m * d.powf(-T::one() / cast(n))
}

/// Fixed-point iteration `T <- Q(S_2 T K)^{1/2} T`, normalized to unit
/// determinant. Since `Q(S_2 T K)` is proportional to `T^{-T} Q(S_2 K) T^{-1}`
/// to first order, each step removes the anisotropy of the current image.
/// The accumulated map is always applied to the original body.
pub fn isotropize<T: Real>(k: &Body<T>, tol: T, max_iter: usize) -> Result<(DMatrix<T>, Body<T>, IsotropyReport<T>)> {
    let dim = k.dim();
    let mut t = DMatrix::identity(dim, dim);
    let mut current = k.clone();
    let mut q = s2_moment_matrix(&current);
    let mut defect = isotropy_defect_of(&q);
    let mut trace = vec![defect];
    let mut iterations = 0;
    while defect >= tol {
        if iterations == max_iter {
            return Err(HbmError::NoConvergence {
                iterations,
                last: to_f64(defect),
            });
        }
        iterations += 1;
        let mut accepted = false;
        for step in [lit::<T>(0.5), lit::<T>(0.25)] {
            let cand_t = unit_det(spd_power(&q, step)? * &t);
            let cand = k.apply_linear(&cand_t)?;
            let cand_q = s2_moment_matrix(&cand);
            let cand_defect = isotropy_defect_of(&cand_q);
            if cand_defect < defect || step < lit::<T>(0.5) {
                t = cand_t;
                current = cand;
                q = cand_q;
                defect = cand_defect;
                accepted = true;
                break;
            }
        }
        debug_assert!(accepted);
        trace.push(defect);
    }
    let report = IsotropyReport {
        moment_matrix: q,
        defect,
        transform: t.clone(),
        iterations,
        defect_trace: trace,
    };
    Ok((t, current, report))
}
