use nalgebra::DMatrix;

use super::{degree_order, n_coeffs, SphereGrid};
use crate::error::{HbmError, Result};
use crate::scalar::Real;

/// Node values, covariant gradients and covariant Hessians of every
/// harmonic up to a degree.
///
/// Column `b` holds harmonic `b` in coefficient order; row `k` is node `k`.
#[derive(Clone, Debug)]
pub struct HarmonicBasis<T: Real> {
    pub degree: usize,
    pub values: DMatrix<T>,
    pub grad: [DMatrix<T>; 2],
    /// Hessian components `(1,1)`, `(1,2)`, `(2,2)`.
    pub hess: [DMatrix<T>; 3],
    pub degrees: Vec<usize>,
}

impl<T: Real> HarmonicBasis<T> {
    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    /// `true` for even harmonics, which satisfy `Y(-theta) = Y(theta)`.
    pub fn is_even(&self, b: usize) -> bool {
        self.degrees[b].is_multiple_of(2)
    }
}

pub fn build_basis<T: Real>(grid: &SphereGrid<T>, degree: usize) -> Result<HarmonicBasis<T>> {
    if degree < 2 {
        return Err(HbmError::DegreeTooLow(degree));
    }
    if degree > grid.max_exact_degree() {
        return Err(HbmError::DegreeTooHigh {
            requested: degree,
            max: grid.max_exact_degree(),
        });
    }
    let dim = grid.dim();
    let nb = n_coeffs(dim, degree);
    let n = grid.len();
    let mut values = DMatrix::zeros(n, nb);
    let mut g0 = DMatrix::zeros(n, nb);
    let mut g1 = DMatrix::zeros(n, nb);
    let mut h11 = DMatrix::zeros(n, nb);
    let mut h12 = DMatrix::zeros(n, nb);
    let mut h22 = DMatrix::zeros(n, nb);
    let mut degrees = Vec::with_capacity(nb);
    let mut c = vec![T::zero(); nb];
    for b in 0..nb {
        c[b] = T::one();
        let f = grid.synthesize(&c)?;
        c[b] = T::zero();
        for (k, j) in f.0.iter().enumerate() {
            values[(k, b)] = j.v;
            g0[(k, b)] = j.g[0];
            g1[(k, b)] = j.g[1];
            h11[(k, b)] = j.h.a;
            h12[(k, b)] = j.h.b;
            h22[(k, b)] = j.h.c;
        }
        degrees.push(degree_order(dim, b).0);
    }
    Ok(HarmonicBasis {
        degree,
        values,
        grad: [g0, g1],
        hess: [h11, h12, h22],
        degrees,
    })
}
