//! Second-order jets of scalar functions on the sphere.
//!
//! A [`Jet`] carries the value, the covariant gradient and the covariant
//! Hessian of a function at a node, expressed in the node's orthonormal
//! tangent frame. Products, quotients and compositions propagate derivatives
//! exactly, so fields built from support functions keep analytic second
//! derivatives without any finite differencing.
//!
//! On S^1 only the first gradient component and the `(1,1)` Hessian entry are
//! used; every operation keeps the unused components at zero.

use std::ops::{Add, Mul, Neg, Sub};

use crate::scalar::{lit, Real};

/// Symmetric 2x2 tensor `[[a, b], [b, c]]`; on S^1 only `a` is meaningful.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sym2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> Sym2<T> {
    pub fn new(a: T, b: T, c: T) -> Self {
        Self { a, b, c }
    }

    pub fn identity(dim: usize) -> Self {
        if dim == 2 {
            Self::new(T::one(), T::zero(), T::zero())
        } else {
            Self::new(T::one(), T::zero(), T::one())
        }
    }

    pub fn det(&self, dim: usize) -> T {
        if dim == 2 {
            self.a
        } else {
            self.a * self.c - self.b * self.b
        }
    }

    pub fn trace(&self, dim: usize) -> T {
        if dim == 2 {
            self.a
        } else {
            self.a + self.c
        }
    }

    pub fn min_eig(&self, dim: usize) -> T {
        if dim == 2 {
            return self.a;
        }
        let half = lit::<T>(0.5);
        let m = (self.a + self.c) * half;
        let d = ((self.a - self.c) * half).hypot(self.b);
        m - d
    }

    pub fn max_eig(&self, dim: usize) -> T {
        if dim == 2 {
            return self.a;
        }
        let half = lit::<T>(0.5);
        let m = (self.a + self.c) * half;
        let d = ((self.a - self.c) * half).hypot(self.b);
        m + d
    }

    /// Adjugate: `det(X) X^{-1}`. On S^1 this is the scalar 1.
    pub fn adj(&self, dim: usize) -> Self {
        if dim == 2 {
            Self::new(T::one(), T::zero(), T::zero())
        } else {
            Self::new(self.c, -self.b, self.a)
        }
    }

    pub fn inverse(&self, dim: usize) -> Option<Self> {
        let det = self.det(dim);
        if det == T::zero() || !det.is_finite() {
            return None;
        }
        let adj = self.adj(dim);
        if dim == 2 {
            Some(Self::new(T::one() / self.a, T::zero(), T::zero()))
        } else {
            Some(adj.scale(T::one() / det))
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s)
    }

    /// `tr(X Y)`.
    pub fn contract(&self, other: &Self, dim: usize) -> T {
        if dim == 2 {
            self.a * other.a
        } else {
            self.a * other.a + lit::<T>(2.0) * self.b * other.b + self.c * other.c
        }
    }

    /// Quadratic form `v^T X w` with tangent vectors `v`, `w`.
    pub fn bilinear(&self, v: &[T; 2], w: &[T; 2]) -> T {
        self.a * v[0] * w[0] + self.b * (v[0] * w[1] + v[1] * w[0]) + self.c * v[1] * w[1]
    }
}

/// Mixed discriminant of two symmetric 2x2 matrices,
/// `D(X, Y) = (tr X tr Y - tr(XY)) / 2`, so that `D(X, X) = det X`.
pub fn mixed_discriminant<T: Real>(x: &Sym2<T>, y: &Sym2<T>) -> T {
    lit::<T>(0.5) * (x.a * y.c + x.c * y.a - lit::<T>(2.0) * x.b * y.b)
}

/// Value, covariant gradient and covariant Hessian at a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T> {
    pub v: T,
    pub g: [T; 2],
    pub h: Sym2<T>,
}

impl<T: Real> Jet<T> {
    pub fn constant(v: T) -> Self {
        Self {
            v,
            g: [T::zero(); 2],
            h: Sym2::new(T::zero(), T::zero(), T::zero()),
        }
    }

    /// `D^2 f = nabla^2 f + f * id` in the tangent frame.
    pub fn d2(&self, dim: usize) -> Sym2<T> {
        if dim == 2 {
            Sym2::new(self.h.a + self.v, T::zero(), T::zero())
        } else {
            Sym2::new(self.h.a + self.v, self.h.b, self.h.c + self.v)
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            v: self.v * s,
            g: [self.g[0] * s, self.g[1] * s],
            h: self.h.scale(s),
        }
    }

    /// Composition `phi(f)` given `phi(v)`, `phi'(v)`, `phi''(v)`.
    pub fn compose(&self, f0: T, f1: T, f2: T) -> Self {
        let g = self.g;
        Self {
            v: f0,
            g: [f1 * g[0], f1 * g[1]],
            h: Sym2::new(
                f1 * self.h.a + f2 * g[0] * g[0],
                f1 * self.h.b + f2 * g[0] * g[1],
                f1 * self.h.c + f2 * g[1] * g[1],
            ),
        }
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.compose(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let r = T::one() / self.v;
        self.compose(self.v.ln(), r, -r * r)
    }

    pub fn recip(&self) -> Self {
        let r = T::one() / self.v;
        self.compose(r, -r * r, lit::<T>(2.0) * r * r * r)
    }

    pub fn powi(&self, k: i32) -> Self {
        match k {
            0 => Self::constant(T::one()),
            1 => *self,
            _ => {
                let kf = T::from_i32(k).unwrap();
                let p2 = self.v.powi(k - 2);
                let p1 = p2 * self.v;
                self.compose(p1 * self.v, kf * p1, kf * (kf - T::one()) * p2)
            }
        }
    }

    /// `f^a` for positive `f`.
    pub fn powf(&self, a: T) -> Self {
        let p = self.v.powf(a);
        let r = T::one() / self.v;
        self.compose(p, a * p * r, a * (a - T::one()) * p * r * r)
    }

    pub fn div(&self, other: &Self) -> Self {
        *self * other.recip()
    }
}

impl<T: Real> Add for Jet<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: Sym2::new(self.h.a + o.h.a, self.h.b + o.h.b, self.h.c + o.h.c),
        }
    }
}

impl<T: Real> Sub for Jet<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Real> Neg for Jet<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for Jet<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (u, w) = (self, o);
        Self {
            v: u.v * w.v,
            g: [u.v * w.g[0] + w.v * u.g[0], u.v * w.g[1] + w.v * u.g[1]],
            h: Sym2::new(
                u.v * w.h.a + w.v * u.h.a + lit::<T>(2.0) * u.g[0] * w.g[0],
                u.v * w.h.b + w.v * u.h.b + u.g[0] * w.g[1] + u.g[1] * w.g[0],
                u.v * w.h.c + w.v * u.h.c + lit::<T>(2.0) * u.g[1] * w.g[1],
            ),
        }
    }
}

/// A jet at every node of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T>(pub Vec<Jet<T>>);

impl<T: Real> Field<T> {
    pub fn constant(len: usize, v: T) -> Self {
        Self(vec![Jet::constant(v); len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> Vec<T> {
        self.0.iter().map(|j| j.v).collect()
    }

    pub fn map(&self, f: impl Fn(&Jet<T>) -> Jet<T>) -> Self {
        Self(self.0.iter().map(f).collect())
    }

    pub fn zip(&self, other: &Self, f: impl Fn(&Jet<T>, &Jet<T>) -> Jet<T>) -> Self {
        assert_eq!(self.len(), other.len(), "fields live on different grids");
        Self(self.0.iter().zip(&other.0).map(|(a, b)| f(a, b)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip(other, |a, b| *a * *b)
    }

    pub fn div(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.div(b))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| *a + *b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| *a - *b)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|a| a.scale(s))
    }

    pub fn add_constant(&self, c: T) -> Self {
        self.map(|a| Jet { v: a.v + c, ..*a })
    }

    pub fn powi(&self, k: i32) -> Self {
        self.map(|a| a.powi(k))
    }

    pub fn powf(&self, p: T) -> Self {
        self.map(|a| a.powf(p))
    }

    pub fn recip(&self) -> Self {
        self.map(|a| a.recip())
    }

    pub fn exp(&self) -> Self {
        self.map(|a| a.exp())
    }

    pub fn ln(&self) -> Self {
        self.map(|a| a.ln())
    }

    pub fn d2(&self, dim: usize) -> Vec<Sym2<T>> {
        self.0.iter().map(|j| j.d2(dim)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet(v: f64, g0: f64, g1: f64, a: f64, b: f64, c: f64) -> Jet<f64> {
        Jet {
            v,
            g: [g0, g1],
            h: Sym2::new(a, b, c),
        }
    }

    #[test]
    fn product_rule_matches_composition() {
        let u = jet(1.3, 0.2, -0.7, 0.5, 0.1, -0.4);
        let sq = u * u;
        let p2 = u.powi(2);
        assert!((sq.v - p2.v).abs() < 1e-14);
        assert!((sq.h.b - p2.h.b).abs() < 1e-14);
        let back = u.exp().ln();
        assert!((back.h.a - u.h.a).abs() < 1e-13);
        assert!((back.g[1] - u.g[1]).abs() < 1e-14);
        let one = u * u.recip();
        assert!((one.v - 1.0).abs() < 1e-15 && one.h.c.abs() < 1e-14);
    }

    #[test]
    fn mixed_discriminant_reduces_to_det() {
        let x = Sym2::new(2.0f64, 0.3, 1.5);
        assert!((mixed_discriminant(&x, &x) - x.det(3)).abs() < 1e-15);
        assert!((x.min_eig(3) * x.max_eig(3) - x.det(3)).abs() < 1e-14);
    }
}
