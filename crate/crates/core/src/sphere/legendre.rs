//! Fully normalized associated Legendre functions and Gauss-Legendre rules.

use crate::scalar::{cast, lit, Real};

/// Index of `(l, m)`, `0 <= m <= l`, in a triangular table.
#[inline(always)]
pub fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

pub fn tri_len(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 2) / 2
}

/// Values of `Pbar_lm(cos t)` for `0 <= m <= l <= lmax`, normalized so that
/// `Y_l0 = Pbar_l0` and `Y_l,+-m = sqrt(2) Pbar_lm {cos, sin}(m phi)` are
/// orthonormal on S^2. No Condon-Shortley phase.
pub fn normalized_plm<T: Real>(x: T, s: T, lmax: usize, out: &mut [T]) {
    debug_assert!(out.len() >= tri_len(lmax));
    let four_pi = lit::<T>(4.0) * T::pi();
    let mut pmm = (T::one() / four_pi).sqrt();
    for m in 0..=lmax {
        if m > 0 {
            let mf: T = cast(m);
            pmm *= ((lit::<T>(2.0) * mf + T::one()) / (lit::<T>(2.0) * mf)).sqrt() * s;
        }
        out[tri(m, m)] = pmm;
        if m == lmax {
            break;
        }
        let mf: T = cast(m);
        let p1 = (lit::<T>(2.0) * mf + lit::<T>(3.0)).sqrt() * x * pmm;
        out[tri(m + 1, m)] = p1;
        let (mut prev2, mut prev1) = (pmm, p1);
        for l in (m + 2)..=lmax {
            let lf: T = cast(l);
            let l1: T = cast(l - 1);
            let a = ((lit::<T>(4.0) * lf * lf - T::one()) / (lf * lf - mf * mf)).sqrt();
            let b = ((l1 * l1 - mf * mf) / (lit::<T>(4.0) * l1 * l1 - T::one())).sqrt();
            let p = a * (x * prev1 - b * prev2);
            out[tri(l, m)] = p;
            prev2 = prev1;
            prev1 = p;
        }
    }
}

/// Colatitude derivative `d/dt Pbar_lm(cos t)` from the values table.
/// Requires `sin t > 0`.
pub fn normalized_plm_dtheta<T: Real>(x: T, s: T, lmax: usize, p: &[T], out: &mut [T]) {
    for m in 0..=lmax {
        let mf: T = cast(m);
        for l in m..=lmax {
            let lf: T = cast(l);
            let lower = if l > m {
                let c =
                    ((lit::<T>(2.0) * lf + T::one()) / (lit::<T>(2.0) * lf - T::one()) * (lf * lf - mf * mf)).sqrt();
                c * p[tri(l - 1, m)]
            } else {
                T::zero()
            };
            out[tri(l, m)] = (lf * x * p[tri(l, m)] - lower) / s;
        }
    }
}

/// Gauss-Legendre nodes on `[-1, 1]` in decreasing order together with weights.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut xs = vec![T::zero(); n];
    let mut ws = vec![T::zero(); n];
    let nf: T = cast(n);
    let eps = T::default_epsilon() * lit(4.0);
    for i in 0..n.div_ceil(2) {
        let mut x = (T::pi() * (cast::<T>(i) + lit(0.75)) / (nf + lit(0.5))).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= eps {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = lit::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        xs[i] = x;
        ws[i] = w;
        xs[n - 1 - i] = -x;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = T::zero();
    }
    (xs, ws)
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf: T = cast(k);
        let p2 = ((lit::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf: T = cast(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}
