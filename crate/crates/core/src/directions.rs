//! Moments of `lin_{K,xi}`, the good-direction inequality and the
//! expectation identity in isotropic position.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::affine::{isotropize, isotropy_defect, DEFAULT_ISOTROPY_TOL, DEFAULT_MAX_ITER};
use crate::body::Body;
use crate::error::{HbmError, Result};
use crate::scalar::{cast, lit, to_f64, Real};
use crate::sphere::{normalize3, SphereGrid, Vec3};

/// `int lin^2 dV_K` and `int lin^4 dV_K` as a quadratic and a quartic form
/// in `xi`, assembled once by quadrature.
#[derive(Clone, Debug)]
pub struct MomentForms<T: Real> {
    pub dim: usize,
    /// `P_ij = int theta_i theta_j h^{-2} dV_K`.
    pub quadratic: DMatrix<T>,
    /// `T_ijkl = int theta_i theta_j theta_k theta_l h^{-4} dV_K`, flattened.
    pub quartic: Vec<T>,
    pub volume: T,
}

impl<T: Real> MomentForms<T> {
    pub fn new(k: &Body<T>) -> Self {
        let dim = k.dim();
        let g = k.grid();
        let h = k.h_values();
        let dv = k.cone_volume_density();
        let mut quadratic = DMatrix::zeros(dim, dim);
        let mut quartic = vec![T::zero(); dim.pow(4)];
        for (i, t) in g.nodes().iter().enumerate() {
            let w2 = g.weights()[i] * dv[i] / (h[i] * h[i]);
            let w4 = w2 / (h[i] * h[i]);
            for a in 0..dim {
                for b in 0..dim {
                    quadratic[(a, b)] += w2 * t[a] * t[b];
                    for c in 0..dim {
                        for d in 0..dim {
                            quartic[((a * dim + b) * dim + c) * dim + d] += w4 * t[a] * t[b] * t[c] * t[d];
                        }
                    }
                }
            }
        }
        Self {
            dim,
            quadratic,
            quartic,
            volume: g.integrate(&dv),
        }
    }

    pub fn m2(&self, xi: &Vec3<T>) -> T {
        let mut s = T::zero();
        for a in 0..self.dim {
            for b in 0..self.dim {
                s += self.quadratic[(a, b)] * xi[a] * xi[b];
            }
        }
        s
    }

    pub fn m4(&self, xi: &Vec3<T>) -> T {
        let n = self.dim;
        let mut s = T::zero();
        for a in 0..n {
            for b in 0..n {
                let ab = xi[a] * xi[b];
                for c in 0..n {
                    for d in 0..n {
                        s += self.quartic[((a * n + b) * n + c) * n + d] * ab * xi[c] * xi[d];
                    }
                }
            }
        }
        s
    }

    /// `m4 - (3n / (n+2)) m2^2 / V(K)`.
    pub fn gap(&self, xi: &Vec3<T>) -> T {
        let m2 = self.m2(xi);
        self.m4(xi) - gap_constant::<T>(self.dim) * m2 * m2 / self.volume
    }
}

fn gap_constant<T: Real>(dim: usize) -> T {
    cast::<T>(3 * dim) / cast::<T>(dim + 2)
}

/// `(int lin^2 dV_K, int lin^4 dV_K)` by direct quadrature.
pub fn lin_moments<T: Real>(k: &Body<T>, xi: &Vec3<T>) -> (T, T) {
    let lin = k.lin(xi);
    let dv = k.cone_volume_density();
    let g = k.grid();
    let m2 = g.integrate_with(|i| lin.0[i].v.powi(2) * dv[i]);
    let m4 = g.integrate_with(|i| lin.0[i].v.powi(4) * dv[i]);
    (m2, m4)
}

pub fn direction_gap<T: Real>(k: &Body<T>, xi: &Vec3<T>) -> T {
    let (m2, m4) = lin_moments(k, xi);
    m4 - gap_constant::<T>(k.dim()) * m2 * m2 / k.volume()
}

#[derive(Clone, Debug)]
pub struct DirectionScan<T> {
    pub xi_grid: Vec<Vec3<T>>,
    /// Quadrature weights of the scan grid; they integrate quartics exactly.
    pub weights: Vec<T>,
    pub m2: Vec<T>,
    pub m4: Vec<T>,
    pub gap: Vec<T>,
    pub best: usize,
}

impl<T: Real> DirectionScan<T> {
    pub fn best_xi(&self) -> Vec3<T> {
        self.xi_grid[self.best]
    }

    pub fn best_gap(&self) -> T {
        self.gap[self.best]
    }

    /// Average gap over the sphere.
    pub fn mean_gap(&self) -> T {
        let total = self.weights.iter().fold(T::zero(), |a, &b| a + b);
        self.gap
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |a, (&g, &w)| a + g * w)
            / total
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["xi_x", "xi_y", "xi_z", "m2", "m4", "gap"])?;
        for i in 0..self.xi_grid.len() {
            let x = self.xi_grid[i];
            w.write_record(&[
                to_f64(x[0]).to_string(),
                to_f64(x[1]).to_string(),
                to_f64(x[2]).to_string(),
                to_f64(self.m2[i]).to_string(),
                to_f64(self.m4[i]).to_string(),
                to_f64(self.gap[i]).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scans `xi` over a product quadrature grid with at least `n_samples`
/// directions.
pub fn scan_directions<T: Real>(k: &Body<T>, n_samples: usize) -> Result<DirectionScan<T>> {
    let dim = k.dim();
    let res = if dim == 2 {
        n_samples.max(6)
    } else {
        ((n_samples as f64 / 2.0).sqrt().ceil() as usize).max(4)
    };
    let grid = SphereGrid::<T>::new(dim, res)?;
    let forms = MomentForms::new(k);
    let rows: Vec<(T, T, T)> = grid
        .nodes()
        .par_iter()
        .map(|xi| {
            let m2 = forms.m2(xi);
            let m4 = forms.m4(xi);
            (m2, m4, m4 - gap_constant::<T>(dim) * m2 * m2 / forms.volume)
        })
        .collect();
    let gap: Vec<T> = rows.iter().map(|r| r.2).collect();
    let best = (0..gap.len())
        .max_by(|&a, &b| gap[a].partial_cmp(&gap[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    Ok(DirectionScan {
        xi_grid: grid.nodes().to_vec(),
        weights: grid.weights().to_vec(),
        m2: rows.iter().map(|r| r.0).collect(),
        m4: rows.iter().map(|r| r.1).collect(),
        gap,
        best,
    })
}

#[derive(Clone, Debug)]
pub struct GoodDirection<T: Real> {
    pub xi: Vec3<T>,
    /// Gap of the returned direction on the original body.
    pub gap: T,
    /// Gap of the scanned direction on the isotropic image.
    pub isotropic_gap: T,
    pub transform: DMatrix<T>,
    pub scan: DirectionScan<T>,
}

/// Moves `K` to `S_2`-isotropic position, scans there, and maps the best
/// direction back. Moments satisfy `m_p(TK, xi) = |det T| m_p(K, T^{-1} xi)`,
/// so the sign of the gap is preserved.
pub fn find_good_direction<T: Real>(k: &Body<T>, n_samples: usize) -> Result<GoodDirection<T>> {
    let (t, iso, _) = isotropize(k, lit(DEFAULT_ISOTROPY_TOL), DEFAULT_MAX_ITER)?;
    let scan = scan_directions(&iso, n_samples)?;
    let best = scan.best_xi();
    let dim = k.dim();
    let tinv = t
        .clone()
        .try_inverse()
        .ok_or_else(|| HbmError::LinearAlgebra("isotropizing map is singular".into()))?;
    let mut back = [T::zero(); 3];
    for (i, b) in back.iter_mut().enumerate().take(dim) {
        for j in 0..dim {
            *b += tinv[(i, j)] * best[j];
        }
    }
    let xi = normalize3(&back).ok_or(HbmError::ZeroVector)?;
    Ok(GoodDirection {
        xi,
        gap: direction_gap(k, &xi),
        isotropic_gap: scan.best_gap(),
        transform: t,
        scan,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct ExpectationIdentity<T> {
    /// Closed-form Gaussian average of the gap,
    /// `3 int h^{-4} dV - (3n/(n+2)) (2A + B^2)`.
    pub gaussian_average: T,
    /// `Var_{V_K}(1 / h^2)`.
    pub variance: T,
    pub residual: T,
    /// `A = || int theta theta^T h^{-2} dV ||_F^2`.
    pub a: T,
    /// `B = int h^{-2} dV`.
    pub b: T,
}

/// Checks the identity between the averaged gap and `3 Var(1/h^2)` on a
/// body in isotropic position, after rescaling to unit volume.
pub fn expectation_identity<T: Real>(k: &Body<T>) -> Result<ExpectationIdentity<T>> {
    let defect = isotropy_defect(k).defect;
    if !(defect < lit::<T>(1e-8)) {
        return Err(HbmError::NotIsotropic(to_f64(defect)));
    }
    let unit = k.scaled(k.volume().powf(-T::one() / cast(k.dim())))?;
    let forms = MomentForms::new(&unit);
    let dim = unit.dim();
    let a = forms.quadratic.norm_squared();
    let b = forms.quadratic.trace();
    let h = unit.h_values();
    let dv = unit.cone_volume_density();
    let g = unit.grid();
    let c4 = g.integrate_with(|i| h[i].powi(-4) * dv[i]);
    let three = lit::<T>(3.0);
    let gaussian_average = three * c4 - gap_constant::<T>(dim) * (lit::<T>(2.0) * a + b * b);
    let vol = g.integrate(&dv);
    let variance = c4 - b * b / vol;
    Ok(ExpectationIdentity {
        gaussian_average,
        variance,
        residual: (gaussian_average - three * variance).abs(),
        a,
        b,
    })
}
