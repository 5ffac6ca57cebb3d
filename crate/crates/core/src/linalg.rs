//! Dense symmetric eigen-solvers used by the spectral and affine modules.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{HbmError, Result};
use crate::scalar::{lit, Real};

/// Eigenpairs of a symmetric-definite pencil `A v = lambda M v`.
#[derive(Clone, Debug)]
pub struct GenEigen<T: Real> {
    /// Ascending.
    pub values: Vec<T>,
    /// Column `k` is `M`-orthonormal and pairs with `values[k]`.
    pub vectors: DMatrix<T>,
}

/// Solves `A v = lambda M v` for symmetric `A` and positive definite `M` by
/// reduction to standard form through the Cholesky factor of `M`.
pub fn generalized_symmetric_eigen<T: Real>(a: &DMatrix<T>, m: &DMatrix<T>) -> Result<GenEigen<T>> {
    let n = a.nrows();
    if a.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(HbmError::DimensionMismatch {
            expected: n,
            got: m.nrows(),
        });
    }
    let chol = Cholesky::new(symmetrize(m))
        .ok_or_else(|| HbmError::LinearAlgebra("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L^{-1} A L^{-T}
    let mut c = symmetrize(a);
    l.solve_lower_triangular_mut(&mut c);
    let mut ct = c.transpose();
    l.solve_lower_triangular_mut(&mut ct);
    let eig = SymmetricEigen::new(symmetrize(&ct));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    let lt = l.transpose();
    for (k, &i) in order.iter().enumerate() {
        values.push(eig.eigenvalues[i]);
        let mut y = eig.eigenvectors.column(i).into_owned();
        if !lt.solve_upper_triangular_mut(&mut y) {
            return Err(HbmError::LinearAlgebra("singular Cholesky factor".into()));
        }
        vectors.set_column(k, &y);
    }
    Ok(GenEigen { values, vectors })
}

/// `(X + X^T) / 2`.
pub fn symmetrize<T: Real>(x: &DMatrix<T>) -> DMatrix<T> {
    (x + x.transpose()) * lit::<T>(0.5)
}

/// `X^s` for symmetric positive definite `X`.
pub fn spd_power<T: Real>(x: &DMatrix<T>, s: T) -> Result<DMatrix<T>> {
    let eig = SymmetricEigen::new(symmetrize(x));
    if eig.eigenvalues.iter().any(|&e| e <= T::zero() || !e.is_finite()) {
        return Err(HbmError::LinearAlgebra("matrix is not positive definite".into()));
    }
    let d = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&e| e.powf(s)));
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&d) * q.transpose())
}

/// `||A v - lambda M v|| / ||M v||`.
pub fn pencil_residual<T: Real>(a: &DMatrix<T>, m: &DMatrix<T>, v: &DVector<T>, lambda: T) -> T {
    let mv = m * v;
    let r = a * v - &mv * lambda;
    r.norm() / mv.norm()
}
