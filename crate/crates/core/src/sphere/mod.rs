//! Quadrature grids on S^1 and S^2, real harmonic transforms with analytic
//! derivatives, and the materialized harmonic basis used by Galerkin
//! assembly.
//!
//! Coefficient vectors are ordered by degree ascending and, within a degree,
//! by order ascending:
//!
//! * S^1: `[1, sin t, cos t, sin 2t, cos 2t, ...]` (order `-k` is `sin kt`).
//! * S^2: index `l^2 + l + m`, with `m < 0` the `sin(|m| phi)` harmonics.
//!
//! All harmonics are L^2-orthonormal with respect to surface measure.

mod basis;
pub mod jet;
pub mod legendre;
mod transform;

pub use basis::{build_basis, HarmonicBasis};
pub use jet::{mixed_discriminant, Field, Jet, Sym2};
pub use transform::eval_expansion;

use crate::error::{HbmError, Result};
use crate::scalar::{cast, lit, Real};

/// Unit vectors are stored with three components; on S^1 the last is zero.
pub type Vec3<T> = [T; 3];

pub const DEFAULT_RESOLUTION_2D: usize = 256;
pub const DEFAULT_RESOLUTION_3D: usize = 64;
pub const DEFAULT_DEGREE_2D: usize = 64;
pub const DEFAULT_DEGREE_3D: usize = 16;

pub fn default_resolution(dim: usize) -> usize {
    if dim == 2 {
        DEFAULT_RESOLUTION_2D
    } else {
        DEFAULT_RESOLUTION_3D
    }
}

pub fn default_degree(dim: usize) -> usize {
    if dim == 2 {
        DEFAULT_DEGREE_2D
    } else {
        DEFAULT_DEGREE_3D
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Layout<T> {
    Circle {
        angles: Vec<T>,
    },
    Product {
        ntheta: usize,
        nphi: usize,
        cos_theta: Vec<T>,
        sin_theta: Vec<T>,
        ring_weights: Vec<T>,
        /// `cos(m phi_j)` and `sin(m phi_j)`, row `j`, column `m`.
        cos_mphi: Vec<T>,
        sin_mphi: Vec<T>,
        /// Per ring: normalized Legendre values and colatitude derivatives.
        plm: Vec<Vec<T>>,
        dplm: Vec<Vec<T>>,
    },
}

/// Quadrature nodes and weights on S^{n-1} with a tangent frame per node.
///
/// S^1 uses `resolution` equispaced angles; S^2 uses a Gauss-Legendre rule
/// with `resolution` colatitudes times `2 * resolution` uniform longitudes.
/// Both node sets are invariant under the antipodal map.
#[derive(Clone, Debug)]
pub struct SphereGrid<T> {
    dim: usize,
    resolution: usize,
    nodes: Vec<Vec3<T>>,
    weights: Vec<T>,
    frames: Vec<[Vec3<T>; 2]>,
    antipode: Vec<usize>,
    max_degree: usize,
    pub(crate) layout: Layout<T>,
}

pub fn build_grid<T: Real>(dim: usize, resolution: usize) -> Result<SphereGrid<T>> {
    SphereGrid::new(dim, resolution)
}

impl<T: Real> SphereGrid<T> {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(HbmError::UnsupportedDimension(dim));
        }
        if resolution < 4 {
            return Err(HbmError::ResolutionTooLow(resolution));
        }
        if dim == 2 {
            Ok(Self::circle(resolution))
        } else {
            Ok(Self::product(resolution))
        }
    }

    fn circle(n: usize) -> Self {
        // Odd node counts are bumped so that the node set stays antipodal.
        let n = n + n % 2;
        let two_pi = lit::<T>(2.0) * T::pi();
        let angles: Vec<T> = (0..n).map(|k| two_pi * cast(k) / cast(n)).collect();
        let nodes = angles.iter().map(|&t| [t.cos(), t.sin(), T::zero()]).collect();
        let frames = angles
            .iter()
            .map(|&t| [[-t.sin(), t.cos(), T::zero()], [T::zero(); 3]])
            .collect();
        let weights = vec![two_pi / cast(n); n];
        let antipode = (0..n).map(|k| (k + n / 2) % n).collect();
        Self {
            dim: 2,
            resolution: n,
            nodes,
            weights,
            frames,
            antipode,
            max_degree: (n - 1) / 2,
            layout: Layout::Circle { angles },
        }
    }

    fn product(ntheta: usize) -> Self {
        let nphi = 2 * ntheta;
        let (xs, gw) = legendre::gauss_legendre::<T>(ntheta);
        let two_pi = lit::<T>(2.0) * T::pi();
        let dphi = two_pi / cast(nphi);
        let phis: Vec<T> = (0..nphi).map(|j| dphi * cast(j)).collect();
        let lmax = ntheta - 1;
        let mut cos_mphi = vec![T::zero(); nphi * (lmax + 1)];
        let mut sin_mphi = vec![T::zero(); nphi * (lmax + 1)];
        for (j, &phi) in phis.iter().enumerate() {
            for m in 0..=lmax {
                let a = phi * cast(m);
                cos_mphi[j * (lmax + 1) + m] = a.cos();
                sin_mphi[j * (lmax + 1) + m] = a.sin();
            }
        }
        let mut nodes = Vec::with_capacity(ntheta * nphi);
        let mut frames = Vec::with_capacity(ntheta * nphi);
        let mut weights = Vec::with_capacity(ntheta * nphi);
        let mut sin_theta = Vec::with_capacity(ntheta);
        let mut plm = Vec::with_capacity(ntheta);
        let mut dplm = Vec::with_capacity(ntheta);
        for (i, &x) in xs.iter().enumerate() {
            let s = (T::one() - x * x).max(T::zero()).sqrt();
            sin_theta.push(s);
            let mut p = vec![T::zero(); legendre::tri_len(lmax)];
            legendre::normalized_plm(x, s, lmax, &mut p);
            let mut d = vec![T::zero(); legendre::tri_len(lmax)];
            legendre::normalized_plm_dtheta(x, s, lmax, &p, &mut d);
            plm.push(p);
            dplm.push(d);
            for &phi in &phis {
                let (sp, cp) = (phi.sin(), phi.cos());
                nodes.push([s * cp, s * sp, x]);
                // The colatitude/longitude frame is regular at every node
                // because Gauss-Legendre colatitudes never hit the poles.
                frames.push([[x * cp, x * sp, -s], [-sp, cp, T::zero()]]);
                weights.push(gw[i] * dphi);
            }
        }
        let mut antipode = Vec::with_capacity(ntheta * nphi);
        for i in 0..ntheta {
            for j in 0..nphi {
                antipode.push((ntheta - 1 - i) * nphi + (j + nphi / 2) % nphi);
            }
        }
        Self {
            dim: 3,
            resolution: ntheta,
            nodes,
            weights,
            frames,
            antipode,
            max_degree: lmax,
            layout: Layout::Product {
                ntheta,
                nphi,
                cos_theta: xs,
                sin_theta,
                ring_weights: gw,
                cos_mphi,
                sin_mphi,
                plm,
                dplm,
            },
        }
    }

    /// Ambient dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3<T>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn frames(&self) -> &[[Vec3<T>; 2]] {
        &self.frames
    }

    /// Index of the node `-theta_k`.
    pub fn antipode(&self, k: usize) -> usize {
        self.antipode[k]
    }

    /// Largest degree `L` such that products of harmonics of degree `<= L`
    /// are integrated exactly.
    pub fn max_exact_degree(&self) -> usize {
        self.max_degree
    }

    /// Largest even degree usable for support-function coefficients.
    pub fn max_even_degree(&self) -> usize {
        self.max_degree - self.max_degree % 2
    }

    /// Surface area `|S^{n-1}|`.
    pub fn area(&self) -> T {
        if self.dim == 2 {
            lit::<T>(2.0) * T::pi()
        } else {
            lit::<T>(4.0) * T::pi()
        }
    }

    /// Volume of the unit ball, `|S^{n-1}| / n`.
    pub fn unit_ball_volume(&self) -> T {
        self.area() / cast(self.dim)
    }

    /// Quadrature sum `sum_k values[k] * w_k`.
    pub fn integrate(&self, values: &[T]) -> T {
        assert_eq!(values.len(), self.len(), "field does not live on this grid");
        values
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&v, &w)| acc + v * w)
    }

    /// Integral of a per-node function given as a closure of the node index.
    pub fn integrate_with(&self, f: impl Fn(usize) -> T) -> T {
        (0..self.len()).fold(T::zero(), |acc, k| acc + f(k) * self.weights[k])
    }

    /// Jet of the linear function `<theta, xi>` at every node.
    pub fn linear_field(&self, xi: &Vec3<T>) -> Field<T> {
        Field(
            self.nodes
                .iter()
                .zip(&self.frames)
                .map(|(theta, frame)| {
                    let v = dot3(theta, xi);
                    let g = [dot3(&frame[0], xi), dot3(&frame[1], xi)];
                    let h = if self.dim == 2 {
                        Sym2::new(-v, T::zero(), T::zero())
                    } else {
                        Sym2::new(-v, T::zero(), -v)
                    };
                    Jet { v, g, h }
                })
                .collect(),
        )
    }

    /// Number of harmonics of degree `<= degree`.
    pub fn n_coeffs(&self, degree: usize) -> usize {
        n_coeffs(self.dim, degree)
    }
}

pub fn n_coeffs(dim: usize, degree: usize) -> usize {
    if dim == 2 {
        2 * degree + 1
    } else {
        (degree + 1) * (degree + 1)
    }
}

/// Degree `l` and signed order `m` of a coefficient index.
pub fn degree_order(dim: usize, idx: usize) -> (usize, i64) {
    if dim == 2 {
        if idx == 0 {
            (0, 0)
        } else {
            let k = idx.div_ceil(2);
            let m = if idx % 2 == 1 { -(k as i64) } else { k as i64 };
            (k, m)
        }
    } else {
        let l = (idx as f64).sqrt().floor() as usize;
        let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
        (l, idx as i64 - (l * l + l) as i64)
    }
}

pub fn coeff_index(dim: usize, l: usize, m: i64) -> usize {
    if dim == 2 {
        match m.cmp(&0) {
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Less => 2 * l - 1,
            std::cmp::Ordering::Greater => 2 * l,
        }
    } else {
        ((l * l + l) as i64 + m) as usize
    }
}

#[inline]
pub fn dot3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn normalize3<T: Real>(a: &Vec3<T>) -> Option<Vec3<T>> {
    let n = dot3(a, a).sqrt();
    if n > T::zero() && n.is_finite() {
        Some([a[0] / n, a[1] / n, a[2] / n])
    } else {
        None
    }
}
