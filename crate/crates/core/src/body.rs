//! Origin-symmetric convex bodies stored as even harmonic expansions of the
//! support function, with derived curvature fields and measures.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{HbmError, Result};
use crate::scalar::{cast, lit, to_f64, Real};
use crate::sphere::{coeff_index, degree_order, eval_expansion, n_coeffs, Field, SphereGrid, Sym2, Vec3};

/// Relative curvature floor: `min eig D^2 h >= CURVATURE_FLOOR * mean eig`.
pub const CURVATURE_FLOOR: f64 = 1e-8;
/// Relative floor for bodies that are only guaranteed weakly convex.
pub const WEAK_CURVATURE_FLOOR: f64 = -1e-9;
/// Degree of the smoothing kernel for `rounded_lq`. Fixed, so the body does
/// not depend on the grid beyond quadrature error.
pub const SMOOTHING_DEGREE: usize = 48;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StandardBody {
    Ball {
        radius: f64,
    },
    /// Image of the unit ball under the row-major `dim x dim` matrix.
    Ellipsoid {
        matrix: Vec<f64>,
    },
    RoundedLq {
        q: f64,
        eps: f64,
    },
    RandomEven {
        seed: u64,
        amplitude: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum MeasureKind {
    /// `S_K`, density `det D^2 h`.
    Surface,
    /// `S_p K`, density `h^{1-p} det D^2 h`.
    LpSurface(f64),
    /// `V_K`, density `h det D^2 h / n`.
    ConeVolume,
}

#[derive(Clone, Debug)]
pub struct MeasureField<T> {
    pub kind: MeasureKind,
    pub density: Vec<T>,
    pub total: T,
}

/// Curvature data of a support function sampled at the grid nodes.
#[derive(Clone, Debug)]
pub struct SupportField<T: Real> {
    pub h: Field<T>,
    pub d2: Vec<Sym2<T>>,
    pub det: Vec<T>,
}

impl<T: Real> SupportField<T> {
    pub fn new(h: Field<T>, dim: usize) -> Self {
        let d2 = h.d2(dim);
        let det = d2.iter().map(|m| m.det(dim)).collect();
        Self { h, d2, det }
    }

    pub fn values(&self) -> Vec<T> {
        self.h.values()
    }

    pub fn cone_volume_density(&self, dim: usize) -> Vec<T> {
        let inv_n = T::one() / cast(dim);
        self.h.0.iter().zip(&self.det).map(|(j, &d)| j.v * d * inv_n).collect()
    }

    /// `(min over nodes of min eig D^2 h, mean eigenvalue)`.
    pub fn curvature_range(&self, dim: usize) -> (T, T) {
        let mut min = T::max_value().unwrap_or_else(|| lit(f64::MAX));
        let mut mean = T::zero();
        for m in &self.d2 {
            min = min.min(m.min_eig(dim));
            mean += m.trace(dim) / cast(dim - 1);
        }
        (min, mean / cast(self.d2.len()))
    }
}

/// An origin-symmetric body in `C^2_+` given by its support function.
///
/// The coefficient vector is the single source of truth; node fields are
/// derived once at construction. Odd coefficients are exactly zero.
#[derive(Clone, Debug)]
pub struct Body<T: Real> {
    grid: Arc<SphereGrid<T>>,
    degree: usize,
    coeffs: Vec<T>,
    field: SupportField<T>,
    meta: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct BodyJson<T> {
    dim: usize,
    max_degree: usize,
    coeffs: Vec<T>,
    #[serde(default)]
    meta: serde_json::Value,
}

impl<T: Real> Body<T> {
    /// Builds a body from a coefficient vector, zeroing odd entries and
    /// checking positivity and the curvature floor.
    pub fn from_coeffs(grid: Arc<SphereGrid<T>>, coeffs: Vec<T>, meta: serde_json::Value) -> Result<Self> {
        Self::with_floor(grid, coeffs, meta, CURVATURE_FLOOR)
    }

    pub(crate) fn with_floor(
        grid: Arc<SphereGrid<T>>,
        mut coeffs: Vec<T>,
        meta: serde_json::Value,
        floor: f64,
    ) -> Result<Self> {
        let dim = grid.dim();
        for (i, c) in coeffs.iter_mut().enumerate() {
            if degree_order(dim, i).0 % 2 == 1 {
                *c = T::zero();
            }
        }
        let h = grid.synthesize(&coeffs)?;
        let degree = degree_order(dim, coeffs.len() - 1).0;
        let field = SupportField::new(h, dim);
        let min_h = field.h.0.iter().fold(T::max_value().unwrap(), |m, j| m.min(j.v));
        if !(min_h > T::zero()) {
            return Err(HbmError::NonPositiveSupport(to_f64(min_h)));
        }
        let (min_eig, mean) = field.curvature_range(dim);
        let floor = lit::<T>(floor) * mean;
        if !(min_eig >= floor) {
            return Err(HbmError::ConvexityFailure {
                min_eig: to_f64(min_eig),
                floor: to_f64(floor),
            });
        }
        Ok(Self {
            grid,
            degree,
            coeffs,
            field,
            meta,
        })
    }

    /// Projects node values of a support function onto even harmonics.
    pub fn from_node_values(
        grid: Arc<SphereGrid<T>>,
        values: &[T],
        degree: usize,
        meta: serde_json::Value,
    ) -> Result<Self> {
        let coeffs = grid.analyze(values, degree)?;
        Self::from_coeffs(grid, coeffs, meta)
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        &self.grid
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn meta(&self) -> &serde_json::Value {
        &self.meta
    }

    pub fn field(&self) -> &SupportField<T> {
        &self.field
    }

    /// Jets of `h_K` at the nodes.
    pub fn h(&self) -> &Field<T> {
        &self.field.h
    }

    pub fn h_values(&self) -> Vec<T> {
        self.field.values()
    }

    /// `D^2 h_K` at the nodes.
    pub fn d2(&self) -> &[Sym2<T>] {
        &self.field.d2
    }

    /// `det D^2 h_K`, the density of `S_K`.
    pub fn curvature_det(&self) -> &[T] {
        &self.field.det
    }

    /// `g_K^{-1} = h (D^2 h)^{-1}` at node `k`.
    pub fn metric_inverse(&self, k: usize) -> Result<Sym2<T>> {
        let dim = self.dim();
        self.field.d2[k]
            .inverse(dim)
            .map(|m| m.scale(self.field.h.0[k].v))
            .ok_or(HbmError::SingularMetric(k))
    }

    pub fn support_at(&self, dir: &Vec3<T>) -> T {
        eval_expansion(self.dim(), &self.coeffs, self.degree, dir)
    }

    /// `c K`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        let coeffs = self.coeffs.iter().map(|&x| x * c).collect();
        Self::from_coeffs(self.grid.clone(), coeffs, self.meta.clone())
    }

    pub fn volume(&self) -> T {
        self.grid.integrate(&self.field.cone_volume_density(self.dim()))
    }

    /// Volume of the polar body, `(1/n) int h^{-n}`.
    pub fn polar_volume(&self) -> T {
        let n = self.dim() as i32;
        self.grid.integrate_with(|k| self.field.h.0[k].v.powi(-n)) / cast(self.dim())
    }

    /// `max h / min h`, the Banach-Mazur type distance to the centered ball.
    pub fn geometric_distance(&self) -> T {
        let (lo, hi) = min_max(&self.h_values());
        hi / lo
    }

    pub fn min_support(&self) -> T {
        min_max(&self.h_values()).0
    }

    pub fn measure(&self, kind: MeasureKind) -> MeasureField<T> {
        let dim = self.dim();
        let density: Vec<T> = match kind {
            MeasureKind::Surface => self.field.det.clone(),
            MeasureKind::ConeVolume => self.field.cone_volume_density(dim),
            MeasureKind::LpSurface(p) => {
                let e = T::one() - lit::<T>(p);
                self.field
                    .h
                    .0
                    .iter()
                    .zip(&self.field.det)
                    .map(|(j, &d)| j.v.powf(e) * d)
                    .collect()
            }
        };
        let total = self.grid.integrate(&density);
        MeasureField { kind, density, total }
    }

    /// Cone-volume density at the nodes.
    pub fn cone_volume_density(&self) -> Vec<T> {
        self.field.cone_volume_density(self.dim())
    }

    /// `h_{TK}(theta) = h_K(T^T theta)` re-expanded in the basis.
    pub fn apply_linear(&self, t: &DMatrix<T>) -> Result<Self> {
        let dim = self.dim();
        check_square(t, dim)?;
        if t.determinant() == T::zero() {
            return Err(HbmError::LinearAlgebra("linear map is singular".into()));
        }
        if *t == DMatrix::identity(dim, dim) {
            return Ok(self.clone());
        }
        let values = self.transformed_values(t);
        let coeffs = self.grid.analyze(&values, self.degree)?;
        let meta = serde_json::json!({ "linear_image_of": self.meta });
        Self::from_coeffs(self.grid.clone(), coeffs, meta)
    }

    /// Node values of `h_{TK}` evaluated off-grid from the expansion of `h_K`.
    pub fn transformed_values(&self, t: &DMatrix<T>) -> Vec<T> {
        let dim = self.dim();
        self.grid
            .nodes()
            .iter()
            .map(|theta| {
                let mut u = [T::zero(); 3];
                for (i, ui) in u.iter_mut().enumerate().take(dim) {
                    for j in 0..dim {
                        *ui += t[(j, i)] * theta[j];
                    }
                }
                let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
                let dir = [u[0] / r, u[1] / r, u[2] / r];
                r * self.support_at(&dir)
            })
            .collect()
    }

    /// `lin_{K,xi} = <theta, xi> / h_K` as a field of jets.
    pub fn lin(&self, xi: &Vec3<T>) -> Field<T> {
        self.grid.linear_field(xi).div(&self.field.h)
    }

    /// The body with support function `h_K ((p-1) R^p + lin^p_{K,xi})`,
    /// which is convex whenever `B/R` is contained in `K`.
    pub fn shifted_support(&self, r: T, p: u32, xi: &Vec3<T>) -> Result<Self> {
        if p == 0 || p % 2 == 1 {
            return Err(HbmError::InvalidSpec(format!(
                "shift exponent must be a positive even integer, got {p}"
            )));
        }
        let min_h = self.min_support();
        if min_h < (T::one() - lit::<T>(1e-12)) / r {
            return Err(HbmError::InradiusViolation {
                min_h: to_f64(min_h),
                inv_r: to_f64(T::one() / r),
            });
        }
        let a = cast::<T>(p as usize - 1) * r.powi(p as i32);
        let lin = self.lin(xi);
        let values: Vec<T> = self
            .field
            .h
            .0
            .iter()
            .zip(&lin.0)
            .map(|(h, l)| h.v * (a + l.v.powi(p as i32)))
            .collect();
        let coeffs = self.grid.analyze(&values, self.degree)?;
        let meta = serde_json::json!({
            "shifted_support": { "r": to_f64(r), "p": p, "xi": xi.map(to_f64) },
        });
        Self::with_floor(self.grid.clone(), coeffs, meta, WEAK_CURVATURE_FLOOR)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&BodyJson {
            dim: self.dim(),
            max_degree: self.degree,
            coeffs: self.coeffs.clone(),
            meta: self.meta.clone(),
        })?)
    }

    pub fn from_json(grid: Arc<SphereGrid<T>>, s: &str) -> Result<Self> {
        let raw: BodyJson<T> = serde_json::from_str(s)?;
        if raw.dim != grid.dim() {
            return Err(HbmError::DimensionMismatch {
                expected: grid.dim(),
                got: raw.dim,
            });
        }
        if raw.coeffs.len() != n_coeffs(raw.dim, raw.max_degree) {
            return Err(HbmError::InvalidSpec(format!(
                "expected {} coefficients for degree {}, found {}",
                n_coeffs(raw.dim, raw.max_degree),
                raw.max_degree,
                raw.coeffs.len()
            )));
        }
        let scale = raw.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()));
        let odd = raw
            .coeffs
            .iter()
            .enumerate()
            .filter(|(i, _)| degree_order(raw.dim, *i).0 % 2 == 1)
            .fold(T::zero(), |m, (_, c)| m.max(c.abs()));
        if odd > lit::<T>(1e-12) * scale {
            return Err(HbmError::InvalidSpec("body has non-zero odd coefficients".into()));
        }
        Self::from_coeffs(grid, raw.coeffs, raw.meta)
    }

    /// Builds one of the standard bodies at the largest even degree the grid
    /// resolves.
    pub fn standard(grid: Arc<SphereGrid<T>>, kind: &StandardBody) -> Result<Self> {
        let degree = grid.max_even_degree();
        make_standard(grid, kind, degree)
    }
}

pub fn make_standard<T: Real>(grid: Arc<SphereGrid<T>>, kind: &StandardBody, degree: usize) -> Result<Body<T>> {
    let dim = grid.dim();
    let meta = serde_json::to_value(kind)?;
    match kind {
        StandardBody::Ball { radius } => {
            if !(*radius > 0.0) {
                return Err(HbmError::InvalidSpec(format!(
                    "ball radius must be positive, got {radius}"
                )));
            }
            let mut coeffs = vec![T::zero(); n_coeffs(dim, degree)];
            coeffs[0] = lit::<T>(*radius) * grid.area().sqrt();
            Body::from_coeffs(grid, coeffs, meta)
        }
        StandardBody::Ellipsoid { matrix } => {
            if matrix.len() != dim * dim {
                return Err(HbmError::DimensionMismatch {
                    expected: dim * dim,
                    got: matrix.len(),
                });
            }
            let a = DMatrix::from_row_slice(dim, dim, &matrix.iter().map(|&x| lit::<T>(x)).collect::<Vec<_>>());
            if a.determinant() == T::zero() {
                return Err(HbmError::InvalidSpec("ellipsoid matrix is singular".into()));
            }
            let values: Vec<T> = grid
                .nodes()
                .iter()
                .map(|theta| {
                    (0..dim)
                        .map(|i| {
                            let s = (0..dim).fold(T::zero(), |acc, j| acc + a[(j, i)] * theta[j]);
                            s * s
                        })
                        .fold(T::zero(), |acc, x| acc + x)
                        .sqrt()
                })
                .collect();
            Body::from_node_values(grid, &values, degree, meta)
        }
        StandardBody::RoundedLq { q, eps } => rounded_lq(grid, *q, *eps, degree, meta),
        StandardBody::RandomEven { seed, amplitude } => random_even(grid, *seed, *amplitude, degree, meta),
    }
}

/// Support function of the `l_q` ball plus `eps` times the unit ball,
/// smoothed by a positive zonal kernel and symmetrized under coordinate
/// permutations.
fn rounded_lq<T: Real>(
    grid: Arc<SphereGrid<T>>,
    q: f64,
    eps: f64,
    degree: usize,
    meta: serde_json::Value,
) -> Result<Body<T>> {
    if !(q > 1.0) || !(eps >= 0.0) {
        return Err(HbmError::InvalidSpec(format!(
            "rounded_lq needs q > 1 and eps >= 0, got q={q}, eps={eps}"
        )));
    }
    let dim = grid.dim();
    let qd = lit::<T>(q / (q - 1.0));
    let e = lit::<T>(eps);
    let values: Vec<T> = grid
        .nodes()
        .iter()
        .map(|x| {
            let s = x.iter().take(dim).fold(T::zero(), |acc, c| acc + c.abs().powf(qd));
            s.powf(T::one() / qd) + e
        })
        .collect();
    let mut coeffs = grid.analyze(&values, degree)?;
    // Multipliers of the kernel ((1 + t) / 2)^L, which is positive, so the
    // smoothed body is an average of rotations of the original one.
    let lf: T = cast(SMOOTHING_DEGREE);
    let mut mult = vec![T::one(); degree + 1];
    for l in 1..=degree.min(SMOOTHING_DEGREE) {
        let j: T = cast(l);
        let step = if dim == 2 {
            (lf - j + T::one()) / (lf + j)
        } else {
            (lf - j + T::one()) / (lf + j + T::one())
        };
        mult[l] = mult[l - 1] * step;
    }
    for l in SMOOTHING_DEGREE + 1..=degree {
        mult[l] = T::zero();
    }
    for (i, c) in coeffs.iter_mut().enumerate() {
        *c *= mult[degree_order(dim, i).0];
    }
    if dim == 3 {
        // The product grid is symmetric under sign changes and quarter turns
        // about the polar axis; averaging over the cyclic coordinate shift
        // completes the octahedral group. Rotation preserves degree, so the
        // re-analysis is exact.
        let mut acc = grid.synthesize_values(&coeffs)?;
        for shift in 1..3 {
            for (k, x) in grid.nodes().iter().enumerate() {
                let y = [x[shift % 3], x[(shift + 1) % 3], x[(shift + 2) % 3]];
                acc[k] += eval_expansion(dim, &coeffs, degree, &y);
            }
        }
        let third = T::one() / lit::<T>(3.0);
        acc.iter_mut().for_each(|v| *v *= third);
        coeffs = grid.analyze(&acc, degree)?;
    }
    Body::from_coeffs(grid, coeffs, meta)
}

/// `h = exp(sum a_lm Y_lm)` over degrees 2, 4, 6 with `a_lm ~ amp N(0,1) / l^2`,
/// rescaled to unit volume.
fn random_even<T: Real>(
    grid: Arc<SphereGrid<T>>,
    seed: u64,
    amplitude: f64,
    degree: usize,
    meta: serde_json::Value,
) -> Result<Body<T>> {
    let log_h = random_log_coeffs(grid.dim(), 6.min(grid.max_exact_degree()), seed, amplitude);
    let values: Vec<T> = grid.synthesize_values(&log_h)?.into_iter().map(|v| v.exp()).collect();
    let body = Body::from_node_values(grid, &values, degree, meta)?;
    let v = body.volume();
    body.scaled(v.powf(-T::one() / cast(body.dim())))
}

/// Coefficients `a_lm ~ amplitude N(0,1) / l^2` on even degrees `2..=top`.
pub(crate) fn random_log_coeffs<T: Real>(dim: usize, top: usize, seed: u64, amplitude: f64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_h = vec![T::zero(); n_coeffs(dim, top)];
    for l in (2..=top).step_by(2) {
        let ms: Vec<i64> = if dim == 2 {
            vec![-(l as i64), l as i64]
        } else {
            (-(l as i64)..=l as i64).collect()
        };
        for m in ms {
            let z: f64 = StandardNormal.sample(&mut rng);
            log_h[coeff_index(dim, l, m)] = lit::<T>(amplitude * z / (l * l) as f64);
        }
    }
    log_h
}

fn check_square<T: Real>(t: &DMatrix<T>, dim: usize) -> Result<()> {
    if t.nrows() != dim || t.ncols() != dim {
        return Err(HbmError::DimensionMismatch {
            expected: dim,
            got: t.nrows(),
        });
    }
    Ok(())
}

pub(crate) fn min_max<T: Real>(v: &[T]) -> (T, T) {
    v.iter().fold((v[0], v[0]), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}
