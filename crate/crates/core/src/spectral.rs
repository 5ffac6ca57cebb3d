//! Galerkin discretization of the Hilbert-Brunn-Minkowski operator
//! `Delta_K`, the weighted Laplacian of `(S^{n-1}, g_K, V_K)`.
//!
//! The trial space is spanned by the harmonics up to a degree plus the
//! `K`-adapted functions `lin_i = <theta, e_i> / h_K` and their products
//! `lin_i lin_j`, orthogonalized against the harmonics. The `lin_i` are
//! exact eigenfunctions with eigenvalue `n - 1` for every `K`, and for
//! ellipsoids the products span the even eigenspace of `2n`, so both
//! eigenvalues are captured exactly regardless of eccentricity.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{HbmError, Result};
use crate::linalg::{generalized_symmetric_eigen, pencil_residual, symmetrize};
use crate::mixed_vol::{v1, v2};
use crate::scalar::{cast, lit, to_f64, Real};
use crate::sphere::{build_basis, Field, HarmonicBasis, Jet, SphereGrid, Sym2};

/// Relative residual below which an extra trial function is considered to
/// lie in the harmonic span and is dropped.
const EXTRA_DROP_TOL: f64 = 1e-8;
/// Relative tolerance for grouping eigenvalues into one multiplicity.
pub const CLUSTER_TOL: f64 = 1e-6;

/// Node jets of a family of trial functions stored column-wise.
#[derive(Clone, Debug)]
pub struct TrialSpace<T: Real> {
    pub values: DMatrix<T>,
    pub grad: [DMatrix<T>; 2],
    pub hess: [DMatrix<T>; 3],
    pub even: Vec<bool>,
    /// Number of leading columns that are plain harmonics.
    pub harmonics: usize,
}

impl<T: Real> TrialSpace<T> {
    pub fn len(&self) -> usize {
        self.even.len()
    }

    pub fn is_empty(&self) -> bool {
        self.even.is_empty()
    }

    /// Jets of `sum_a c_a phi_a`.
    pub fn field(&self, c: &DVector<T>) -> Field<T> {
        let v = &self.values * c;
        let g0 = &self.grad[0] * c;
        let g1 = &self.grad[1] * c;
        let h0 = &self.hess[0] * c;
        let h1 = &self.hess[1] * c;
        let h2 = &self.hess[2] * c;
        Field(
            (0..v.len())
                .map(|k| Jet {
                    v: v[k],
                    g: [g0[k], g1[k]],
                    h: Sym2::new(h0[k], h1[k], h2[k]),
                })
                .collect(),
        )
    }

    pub fn column(&self, a: usize) -> Field<T> {
        let mut c = DVector::zeros(self.len());
        c[a] = T::one();
        self.field(&c)
    }

    pub fn parity_indices(&self, even: bool) -> Vec<usize> {
        (0..self.len()).filter(|&a| self.even[a] == even).collect()
    }

    fn push(&mut self, f: &Field<T>, even: bool) {
        let n = self.values.nrows();
        let b = self.len();
        let grow = |m: &mut DMatrix<T>, get: &dyn Fn(&Jet<T>) -> T| {
            let old = std::mem::replace(m, DMatrix::zeros(0, 0));
            let mut new = old.resize_horizontally(b + 1, T::zero());
            for k in 0..n {
                new[(k, b)] = get(&f.0[k]);
            }
            *m = new;
        };
        grow(&mut self.values, &|j| j.v);
        grow(&mut self.grad[0], &|j| j.g[0]);
        grow(&mut self.grad[1], &|j| j.g[1]);
        grow(&mut self.hess[0], &|j| j.h.a);
        grow(&mut self.hess[1], &|j| j.h.b);
        grow(&mut self.hess[2], &|j| j.h.c);
        self.even.push(even);
    }
}

/// Reusable discretization context: grid plus harmonic basis.
#[derive(Clone, Debug)]
pub struct Spectral<T: Real> {
    grid: Arc<SphereGrid<T>>,
    basis: Arc<HarmonicBasis<T>>,
    extras: bool,
}

/// Stiffness, mass and mean of `Delta_K` on a trial space.
#[derive(Clone, Debug)]
pub struct OperatorAssembly<T: Real> {
    /// `A_ab = int g_K(grad phi_a, grad phi_b) dV_K`.
    pub stiffness: DMatrix<T>,
    /// `M_ab = int phi_a phi_b dV_K`.
    pub mass: DMatrix<T>,
    /// `m_a = int phi_a dV_K`.
    pub mean: DVector<T>,
    pub volume: T,
    pub trial: TrialSpace<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subspace {
    All,
    Even,
}

#[derive(Clone, Debug)]
pub struct SpectralResult<T: Real> {
    pub eigenvalues: Vec<T>,
    /// Coefficients in the trial space of the assembly.
    pub eigenvectors: Vec<DVector<T>>,
    pub subspace: Subspace,
    pub residuals: Vec<T>,
}

#[derive(Serialize)]
struct SpectralJson {
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
    subspace: Subspace,
}

impl<T: Real> SpectralResult<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SpectralJson {
            eigenvalues: self.eigenvalues.iter().map(|&x| to_f64(x)).collect(),
            residuals: self.residuals.iter().map(|&x| to_f64(x)).collect(),
            subspace: self.subspace,
        })?)
    }
}

#[derive(Clone, Debug)]
pub struct FirstEigen<T: Real> {
    pub value: T,
    pub multiplicity: usize,
    /// Every eigenvalue counted in the multiplicity.
    pub cluster: Vec<T>,
    pub eigenvectors: Vec<DVector<T>>,
    pub residuals: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct FirstEvenEigen<T: Real> {
    pub value: T,
    pub eigenvector: DVector<T>,
    pub residual: T,
}

impl<T: Real> Spectral<T> {
    pub fn new(grid: Arc<SphereGrid<T>>, degree: usize) -> Result<Self> {
        let basis = Arc::new(build_basis(&grid, degree)?);
        Ok(Self {
            grid,
            basis,
            extras: true,
        })
    }

    /// Uses plain harmonics only, without the `K`-adapted functions.
    pub fn harmonics_only(mut self) -> Self {
        self.extras = false;
        self
    }

    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        &self.grid
    }

    pub fn basis(&self) -> &HarmonicBasis<T> {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree
    }

    /// Harmonics followed by the orthogonalized `K`-adapted functions.
    pub fn trial_space(&self, k: &Body<T>) -> TrialSpace<T> {
        let b = &self.basis;
        let mut ts = TrialSpace {
            values: b.values.clone(),
            grad: b.grad.clone(),
            hess: b.hess.clone(),
            even: (0..b.len()).map(|a| b.is_even(a)).collect(),
            harmonics: b.len(),
        };
        if !self.extras {
            return ts;
        }
        let dim = self.grid.dim();
        let lins: Vec<Field<T>> = (0..dim)
            .map(|i| {
                let mut e = [T::zero(); 3];
                e[i] = T::one();
                k.lin(&e)
            })
            .collect();
        let mut candidates: Vec<(Field<T>, bool)> = lins.iter().map(|l| (l.clone(), false)).collect();
        for i in 0..dim {
            for j in i..dim {
                candidates.push((lins[i].mul(&lins[j]), true));
            }
        }
        let w = self.grid.weights();
        for (f, even) in candidates {
            let norm0 = self.grid.integrate_with(|k| f.0[k].v * f.0[k].v).sqrt();
            // Coefficients against every current column, in L^2 of the
            // round measure.
            let fv = DVector::from_iterator(f.len(), f.0.iter().zip(w).map(|(j, &wk)| j.v * wk));
            let coef = ts.values.transpose() * &fv;
            let proj = ts.field(&coef);
            let r = f.sub(&proj);
            let norm = self.grid.integrate_with(|k| r.0[k].v * r.0[k].v).sqrt();
            if norm > lit::<T>(EXTRA_DROP_TOL) * norm0 {
                ts.push(&r.scale(T::one() / norm), even);
            }
        }
        ts
    }

    pub fn assemble(&self, k: &Body<T>) -> Result<OperatorAssembly<T>> {
        check_grid(&self.grid, k)?;
        let trial = self.trial_space(k);
        let dim = k.dim();
        let n = self.grid.len();
        let w = self.grid.weights();
        let dv = k.cone_volume_density();
        let h = k.h_values();
        let inv_n = T::one() / cast(dim);
        let mut wm = DVector::zeros(n);
        let mut w00 = DVector::zeros(n);
        let mut w01 = DVector::zeros(n);
        let mut w11 = DVector::zeros(n);
        for i in 0..n {
            wm[i] = w[i] * dv[i];
            // g_K^{-1} dV_K = (1/n) h^2 adj(D^2 h).
            let adj = k.d2()[i].adj(dim);
            let c = w[i] * h[i] * h[i] * inv_n;
            w00[i] = c * adj.a;
            w01[i] = c * adj.b;
            w11[i] = c * adj.c;
            if !(adj.det(dim) > T::zero()) && dim == 3 {
                return Err(HbmError::SingularMetric(i));
            }
        }
        let phi = &trial.values;
        let mass = symmetrize(&(phi.transpose() * scale_rows(phi, &wm)));
        let mean = phi.transpose() * &wm;
        let g0 = &trial.grad[0];
        let stiffness = if dim == 2 {
            g0.transpose() * scale_rows(g0, &w00)
        } else {
            let g1 = &trial.grad[1];
            let y0 = scale_rows(g0, &w00) + scale_rows(g1, &w01);
            let y1 = scale_rows(g0, &w01) + scale_rows(g1, &w11);
            g0.transpose() * y0 + g1.transpose() * y1
        };
        Ok(OperatorAssembly {
            stiffness: symmetrize(&stiffness),
            mass,
            mean,
            volume: k.volume(),
            trial,
        })
    }

    pub fn lambda1(&self, k: &Body<T>) -> Result<FirstEigen<T>> {
        lambda1(&self.assemble(k)?)
    }

    pub fn lambda1_even(&self, k: &Body<T>) -> Result<FirstEvenEigen<T>> {
        lambda1_even(&self.assemble(k)?)
    }
}

fn check_grid<T: Real>(grid: &Arc<SphereGrid<T>>, k: &Body<T>) -> Result<()> {
    if !Arc::ptr_eq(grid, k.grid()) && (grid.dim() != k.dim() || grid.len() != k.grid().len()) {
        return Err(HbmError::DimensionMismatch {
            expected: grid.len(),
            got: k.grid().len(),
        });
    }
    Ok(())
}

fn scale_rows<T: Real>(m: &DMatrix<T>, s: &DVector<T>) -> DMatrix<T> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= s[i];
    }
    out
}

fn submatrix<T: Real>(m: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

fn embed<T: Real>(v: &DVector<T>, idx: &[usize], len: usize) -> DVector<T> {
    let mut out = DVector::zeros(len);
    for (i, &a) in idx.iter().enumerate() {
        out[a] = v[i];
    }
    out
}

/// Trial indices, eigenvalues, eigenvectors and pencil residuals.
type Block<T> = (Vec<usize>, Vec<T>, Vec<DVector<T>>, Vec<T>);

/// Eigen-decomposition of one parity block. On the even block the constants
/// are moved out of the way by the rank-one shift `sigma m m^T / V`, which
/// leaves every other eigenpair untouched because eigenvectors with nonzero
/// eigenvalue have zero `V_K`-mean.
fn block_spectrum<T: Real>(asm: &OperatorAssembly<T>, even: bool) -> Result<Block<T>> {
    let idx = asm.trial.parity_indices(even);
    let a = submatrix(&asm.stiffness, &idx);
    let m = submatrix(&asm.mass, &idx);
    let mut shifted = a.clone();
    if even {
        let sigma = deflation_shift::<T>(asm);
        let mv = DVector::from_iterator(idx.len(), idx.iter().map(|&i| asm.mean[i]));
        shifted += &mv * mv.transpose() * (sigma / asm.volume);
    }
    let eig = generalized_symmetric_eigen(&shifted, &m)?;
    let mut values = Vec::with_capacity(idx.len());
    let mut vectors = Vec::with_capacity(idx.len());
    let mut residuals = Vec::with_capacity(idx.len());
    for (kk, &lam) in eig.values.iter().enumerate() {
        let v = eig.vectors.column(kk).into_owned();
        residuals.push(pencil_residual(&shifted, &m, &v, lam));
        values.push(lam);
        vectors.push(v);
    }
    Ok((idx, values, vectors, residuals))
}

fn deflation_shift<T: Real>(asm: &OperatorAssembly<T>) -> T {
    // Above 2n, the largest value lambda_{1,e} can take.
    let dim: T = cast(if asm.trial.grad[1].iter().all(|&x| x == T::zero()) {
        2
    } else {
        3
    });
    lit::<T>(10.0) * (lit::<T>(2.0) * dim + T::one())
}

/// Full Galerkin spectrum on the chosen subspace; the even spectrum omits
/// the constant mode.
pub fn spectrum<T: Real>(asm: &OperatorAssembly<T>, subspace: Subspace) -> Result<SpectralResult<T>> {
    let len = asm.trial.len();
    let sigma = deflation_shift(asm);
    let mut pairs: Vec<(T, DVector<T>, T)> = Vec::new();
    let (idx, vals, vecs, res) = block_spectrum(asm, true)?;
    let mut constant_seen = false;
    for ((lam, v), r) in vals.into_iter().zip(vecs).zip(res) {
        let v = embed(&v, &idx, len);
        let mean = asm.mean.dot(&v);
        // The constant mode sits exactly at sigma after the shift.
        if !constant_seen
            && (lam - sigma).abs() < lit::<T>(1e-6) * sigma
            && mean.abs() > lit::<T>(1e-3) * asm.volume.sqrt()
        {
            constant_seen = true;
            if subspace == Subspace::All {
                pairs.push((T::zero(), v, r));
            }
            continue;
        }
        pairs.push((lam, v, r));
    }
    if subspace == Subspace::All {
        let (idx, vals, vecs, res) = block_spectrum(asm, false)?;
        for ((lam, v), r) in vals.into_iter().zip(vecs).zip(res) {
            pairs.push((lam, embed(&v, &idx, len), r));
        }
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    Ok(SpectralResult {
        eigenvalues: pairs.iter().map(|p| p.0).collect(),
        eigenvectors: pairs.iter().map(|p| p.1.clone()).collect(),
        subspace,
        residuals: pairs.iter().map(|p| p.2).collect(),
    })
}

/// Smallest nonzero eigenvalue on the full space with its multiplicity.
pub fn lambda1<T: Real>(asm: &OperatorAssembly<T>) -> Result<FirstEigen<T>> {
    let spec = spectrum(asm, Subspace::All)?;
    let first = spec
        .eigenvalues
        .iter()
        .position(|&l| l > lit::<T>(1e-8))
        .ok_or_else(|| HbmError::LinearAlgebra("no nonzero eigenvalue".into()))?;
    let value = spec.eigenvalues[first];
    let tol = lit::<T>(CLUSTER_TOL) * value;
    let members: Vec<usize> = (first..spec.eigenvalues.len())
        .take_while(|&i| (spec.eigenvalues[i] - value).abs() <= tol)
        .collect();
    Ok(FirstEigen {
        value,
        multiplicity: members.len(),
        cluster: members.iter().map(|&i| spec.eigenvalues[i]).collect(),
        eigenvectors: members.iter().map(|&i| spec.eigenvectors[i].clone()).collect(),
        residuals: members.iter().map(|&i| spec.residuals[i]).collect(),
    })
}

/// Smallest eigenvalue on even functions with zero `V_K`-mean.
pub fn lambda1_even<T: Real>(asm: &OperatorAssembly<T>) -> Result<FirstEvenEigen<T>> {
    let spec = spectrum(asm, Subspace::Even)?;
    Ok(FirstEvenEigen {
        value: spec.eigenvalues[0],
        eigenvector: spec.eigenvectors[0].clone(),
        residual: spec.residuals[0],
    })
}

/// `int g_K(grad z, grad w) dV_K`.
pub fn dirichlet_form<T: Real>(k: &Body<T>, z: &Field<T>, w: &Field<T>) -> T {
    let dim = k.dim();
    let inv_n = T::one() / cast(dim);
    let h = k.h();
    k.grid().integrate_with(|i| {
        let adj = k.d2()[i].adj(dim);
        let c = h.0[i].v * h.0[i].v * inv_n;
        if dim == 2 {
            c * z.0[i].g[0] * w.0[i].g[0]
        } else {
            c * adj.bilinear(&z.0[i].g, &w.0[i].g)
        }
    })
}

/// `int |grad z|^2_{g_K} dV_K`.
pub fn dirichlet_energy<T: Real>(k: &Body<T>, z: &Field<T>) -> T {
    dirichlet_form(k, z, z)
}

/// `Var_{V_K}(z) = int z^2 dV_K - (int z dV_K)^2 / V(K)`.
pub fn variance<T: Real>(k: &Body<T>, z: &Field<T>) -> T {
    let dv = k.cone_volume_density();
    let g = k.grid();
    let m1 = g.integrate_with(|i| z.0[i].v * dv[i]);
    let m2 = g.integrate_with(|i| z.0[i].v * z.0[i].v * dv[i]);
    let v = g.integrate(&dv);
    m2 - m1 * m1 / v
}

/// Rayleigh quotient of `-Delta_K` relative to the `V_K`-variance.
pub fn rayleigh<T: Real>(k: &Body<T>, z: &Field<T>) -> Result<T> {
    let var = variance(k, z);
    let dv = k.cone_volume_density();
    let scale = k.grid().integrate_with(|i| z.0[i].v * z.0[i].v * dv[i]);
    if !(var > lit::<T>(1e-12) * scale) {
        return Err(HbmError::DegenerateTestFunction);
    }
    Ok(dirichlet_energy(k, z) / var)
}

/// Pointwise `Delta_K z = tr((D^2 h)^{-1} D^2(z h)) - (n - 1) z`.
pub fn laplacian<T: Real>(k: &Body<T>, z: &Field<T>) -> Result<Vec<T>> {
    let dim = k.dim();
    let zh = z.mul(k.h()).d2(dim);
    let nm1: T = cast(dim - 1);
    (0..z.len())
        .map(|i| {
            let inv = k.d2()[i].inverse(dim).ok_or(HbmError::SingularMetric(i))?;
            Ok(inv.contract(&zh[i], dim) - nm1 * z.0[i].v)
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub struct QuotientC<T> {
    pub value: T,
    pub numerator: T,
    pub denominator: T,
}

/// The mixed-volume quotient
/// `(n-1) [int f^2 dV_K - V(L[2], K[n-2])] / [int f^2 dV_K - V(L[1], K[n-1])^2 / V(K)]`
/// with `f = h_L / h_K`.
pub fn quotient_c<T: Real>(k: &Body<T>, l: &Body<T>) -> Result<QuotientC<T>> {
    let dv = k.cone_volume_density();
    let hk = k.h_values();
    let hl = l.h_values();
    let g = k.grid();
    let f2 = g.integrate_with(|i| (hl[i] / hk[i]).powi(2) * dv[i]);
    let vol = k.volume();
    let a = v1(k, l);
    let nm1: T = cast(k.dim() - 1);
    let numerator = nm1 * (f2 - v2(k, l)?);
    let denominator = f2 - a * a / vol;
    if !(denominator > lit::<T>(1e-12) * f2) {
        return Err(HbmError::DegenerateTestBody);
    }
    Ok(QuotientC {
        value: numerator / denominator,
        numerator,
        denominator,
    })
}

/// Minimum of the mixed-volume quotient over `h_L = h_K (1 + z)` with `z`
/// in the even trial space. The numerator form is assembled from mixed
/// volumes, independently of the stiffness matrix.
pub fn minimize_quotient_c<T: Real>(asm: &OperatorAssembly<T>, k: &Body<T>) -> Result<(T, DVector<T>)> {
    let idx = asm.trial.parity_indices(true);
    let dim = k.dim();
    let g = k.grid();
    let n = g.len();
    let w = g.weights();
    let h = k.h();
    let hd2 = k.d2();
    let b = idx.len();
    // Per trial function: phi h and D^2(phi h) at every node.
    let mut ph = DMatrix::zeros(n, b);
    let mut x = [DMatrix::zeros(n, b), DMatrix::zeros(n, b), DMatrix::zeros(n, b)];
    for (c, &a) in idx.iter().enumerate() {
        let f = asm.trial.column(a).mul(h);
        let d2 = f.d2(dim);
        for i in 0..n {
            ph[(i, c)] = f.0[i].v;
            x[0][(i, c)] = d2[i].a;
            x[1][(i, c)] = d2[i].b;
            x[2][(i, c)] = d2[i].c;
        }
    }
    let half = lit::<T>(0.5);
    let inv_n = T::one() / cast(dim);
    // V(phi_a h, phi_b h, h[n-2]), averaged over the outside slot.
    let vmat = if dim == 2 {
        let wd = DVector::from_iterator(n, w.iter().copied());
        let p = ph.transpose() * scale_rows(&x[0], &wd) * inv_n;
        (&p + p.transpose()) * half
    } else {
        let hw = DVector::from_iterator(n, (0..n).map(|i| w[i] * h.0[i].v));
        let wv = DVector::from_iterator(n, w.iter().copied());
        // D(X_b, D^2 h) per node.
        let mut dxh = DMatrix::zeros(n, b);
        for c in 0..b {
            for i in 0..n {
                let xb = Sym2::new(x[0][(i, c)], x[1][(i, c)], x[2][(i, c)]);
                dxh[(i, c)] = crate::sphere::mixed_discriminant(&xb, &hd2[i]);
            }
        }
        let p = ph.transpose() * scale_rows(&dxh, &wv) * inv_n;
        // (1/n) int h D(X_a, X_b)
        let q = (x[0].transpose() * scale_rows(&x[2], &hw) + x[2].transpose() * scale_rows(&x[0], &hw)) * half
            - x[1].transpose() * scale_rows(&x[1], &hw);
        let q = q * inv_n;
        (&p + p.transpose() + q) / lit::<T>(3.0)
    };
    let m = submatrix(&asm.mass, &idx);
    let mean = DVector::from_iterator(b, idx.iter().map(|&i| asm.mean[i]));
    let nm1: T = cast(dim - 1);
    let numer = symmetrize(&((&m - &vmat) * nm1));
    let var = symmetrize(&(&m - &mean * mean.transpose() / asm.volume));
    // The constant direction is null for both forms; shift it out as in the
    // eigen-solver, on the mass side this time.
    let sigma = deflation_shift(asm);
    let var_shift = &var + &mean * mean.transpose() / asm.volume;
    let numer_shift = &numer + &mean * mean.transpose() * (sigma / asm.volume);
    let eig = generalized_symmetric_eigen(&numer_shift, &var_shift)?;
    let v = eig.vectors.column(0).into_owned();
    Ok((eig.values[0], embed(&v, &idx, asm.trial.len())))
}
