//! Synthesis and analysis between harmonic coefficients and node values.

use super::legendre::{normalized_plm, tri, tri_len};
use super::{degree_order, n_coeffs, Field, Jet, Layout, SphereGrid, Sym2, Vec3};
use crate::error::{HbmError, Result};
use crate::scalar::{cast, lit, Real};

impl<T: Real> SphereGrid<T> {
    fn degree_of_len(&self, len: usize) -> Result<usize> {
        let degree = if self.dim() == 2 {
            if len.is_multiple_of(2) {
                return Err(HbmError::DimensionMismatch {
                    expected: len + 1,
                    got: len,
                });
            }
            (len - 1) / 2
        } else {
            let l = (len as f64).sqrt().round() as usize;
            if l * l != len || l == 0 {
                return Err(HbmError::DimensionMismatch {
                    expected: l.max(1) * l.max(1),
                    got: len,
                });
            }
            l - 1
        };
        if degree > self.max_exact_degree() {
            return Err(HbmError::DegreeTooHigh {
                requested: degree,
                max: self.max_exact_degree(),
            });
        }
        Ok(degree)
    }

    /// Node jets of the function with the given coefficients.
    pub fn synthesize(&self, coeffs: &[T]) -> Result<Field<T>> {
        let degree = self.degree_of_len(coeffs.len())?;
        Ok(match &self.layout {
            Layout::Circle { angles } => {
                let (c0, rpi) = circle_norms::<T>();
                Field(
                    angles
                        .iter()
                        .map(|&t| {
                            let mut v = coeffs[0] * c0;
                            let mut d1 = T::zero();
                            let mut d2 = T::zero();
                            for k in 1..=degree {
                                let kf: T = cast(k);
                                let (s, c) = (t * kf).sin_cos();
                                let b = coeffs[2 * k - 1] * rpi;
                                let a = coeffs[2 * k] * rpi;
                                v += a * c + b * s;
                                d1 += kf * (b * c - a * s);
                                d2 -= kf * kf * (a * c + b * s);
                            }
                            Jet {
                                v,
                                g: [d1, T::zero()],
                                h: Sym2::new(d2, T::zero(), T::zero()),
                            }
                        })
                        .collect(),
                )
            }
            Layout::Product {
                ntheta,
                nphi,
                cos_theta,
                sin_theta,
                cos_mphi,
                sin_mphi,
                plm,
                dplm,
                ..
            } => {
                let lmax = self.max_exact_degree();
                let sqrt2 = lit::<T>(2.0).sqrt();
                let mut out = Vec::with_capacity(ntheta * nphi);
                // Per-order Fourier amplitudes of f, f_t and f_tt on one ring.
                let mut amp = vec![[T::zero(); 6]; degree + 1];
                for i in 0..*ntheta {
                    let (x, s) = (cos_theta[i], sin_theta[i]);
                    let cot = x / s;
                    let (p, dp) = (&plm[i], &dplm[i]);
                    for (m, a) in amp.iter_mut().enumerate() {
                        *a = [T::zero(); 6];
                        let mf: T = cast(m);
                        let m2s = mf * mf / (s * s);
                        let norm = if m == 0 { T::one() } else { sqrt2 };
                        for l in m..=degree {
                            let lf: T = cast(l);
                            let pv = p[tri(l, m)] * norm;
                            let dv = dp[tri(l, m)] * norm;
                            let ddv = -cot * dv - (lf * (lf + T::one()) - m2s) * pv;
                            let cc = coeffs[l * l + l + m];
                            a[0] += cc * pv;
                            a[1] += cc * dv;
                            a[2] += cc * ddv;
                            if m > 0 {
                                let cs = coeffs[l * l + l - m];
                                a[3] += cs * pv;
                                a[4] += cs * dv;
                                a[5] += cs * ddv;
                            }
                        }
                    }
                    for j in 0..*nphi {
                        let row = j * (lmax + 1);
                        let mut f = [T::zero(); 6];
                        for (m, a) in amp.iter().enumerate() {
                            let mf: T = cast(m);
                            let (c, sn) = (cos_mphi[row + m], sin_mphi[row + m]);
                            f[0] += a[0] * c + a[3] * sn;
                            f[1] += a[1] * c + a[4] * sn;
                            f[2] += a[2] * c + a[5] * sn;
                            f[3] += mf * (a[3] * c - a[0] * sn);
                            f[4] += mf * (a[4] * c - a[1] * sn);
                            f[5] -= mf * mf * (a[0] * c + a[3] * sn);
                        }
                        let [v, ft, ftt, fp, ftp, fpp] = f;
                        out.push(Jet {
                            v,
                            g: [ft, fp / s],
                            h: Sym2::new(ftt, (ftp - cot * fp) / s, fpp / (s * s) + cot * ft),
                        });
                    }
                }
                Field(out)
            }
        })
    }

    /// Node values only; cheaper than [`Self::synthesize`].
    pub fn synthesize_values(&self, coeffs: &[T]) -> Result<Vec<T>> {
        let degree = self.degree_of_len(coeffs.len())?;
        Ok(match &self.layout {
            Layout::Circle { .. } => self.synthesize(coeffs)?.values(),
            Layout::Product {
                ntheta,
                nphi,
                cos_mphi,
                sin_mphi,
                plm,
                ..
            } => {
                let lmax = self.max_exact_degree();
                let sqrt2 = lit::<T>(2.0).sqrt();
                let mut out = Vec::with_capacity(ntheta * nphi);
                let mut amp = vec![[T::zero(); 2]; degree + 1];
                for p in plm.iter() {
                    for (m, a) in amp.iter_mut().enumerate() {
                        let norm = if m == 0 { T::one() } else { sqrt2 };
                        *a = [T::zero(); 2];
                        for l in m..=degree {
                            let pv = p[tri(l, m)] * norm;
                            a[0] += coeffs[l * l + l + m] * pv;
                            if m > 0 {
                                a[1] += coeffs[l * l + l - m] * pv;
                            }
                        }
                    }
                    for j in 0..*nphi {
                        let row = j * (lmax + 1);
                        let mut v = T::zero();
                        for (m, a) in amp.iter().enumerate() {
                            v += a[0] * cos_mphi[row + m] + a[1] * sin_mphi[row + m];
                        }
                        out.push(v);
                    }
                }
                out
            }
        })
    }

    /// Quadrature projection of node values onto harmonics of degree
    /// `<= degree`.
    pub fn analyze(&self, values: &[T], degree: usize) -> Result<Vec<T>> {
        if values.len() != self.len() {
            return Err(HbmError::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        if degree > self.max_exact_degree() {
            return Err(HbmError::DegreeTooHigh {
                requested: degree,
                max: self.max_exact_degree(),
            });
        }
        let mut out = vec![T::zero(); n_coeffs(self.dim(), degree)];
        match &self.layout {
            Layout::Circle { angles } => {
                let (c0, rpi) = circle_norms::<T>();
                for ((&t, &v), &w) in angles.iter().zip(values).zip(self.weights()) {
                    let vw = v * w;
                    out[0] += vw * c0;
                    for k in 1..=degree {
                        let (s, c) = (t * cast::<T>(k)).sin_cos();
                        out[2 * k - 1] += vw * s * rpi;
                        out[2 * k] += vw * c * rpi;
                    }
                }
            }
            Layout::Product {
                ntheta,
                nphi,
                ring_weights,
                cos_mphi,
                sin_mphi,
                plm,
                ..
            } => {
                let lmax = self.max_exact_degree();
                let sqrt2 = lit::<T>(2.0).sqrt();
                let dphi = lit::<T>(2.0) * T::pi() / cast(*nphi);
                let mut four = vec![[T::zero(); 2]; degree + 1];
                for i in 0..*ntheta {
                    for f in four.iter_mut() {
                        *f = [T::zero(); 2];
                    }
                    for j in 0..*nphi {
                        let v = values[i * nphi + j];
                        let row = j * (lmax + 1);
                        for (m, f) in four.iter_mut().enumerate() {
                            f[0] += v * cos_mphi[row + m];
                            f[1] += v * sin_mphi[row + m];
                        }
                    }
                    let wr = ring_weights[i] * dphi;
                    let p = &plm[i];
                    for (m, f) in four.iter().enumerate() {
                        let norm = if m == 0 { T::one() } else { sqrt2 } * wr;
                        for l in m..=degree {
                            let pv = p[tri(l, m)] * norm;
                            out[l * l + l + m] += f[0] * pv;
                            if m > 0 {
                                out[l * l + l - m] += f[1] * pv;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Value of the harmonic expansion at an arbitrary unit vector.
    pub fn eval_dir(&self, coeffs: &[T], dir: &Vec3<T>) -> Result<T> {
        let degree = self.degree_of_len(coeffs.len())?;
        Ok(eval_expansion(self.dim(), coeffs, degree, dir))
    }

    /// Value of a single basis harmonic at every node.
    pub fn harmonic_values(&self, idx: usize) -> Vec<T> {
        let (l, _) = degree_order(self.dim(), idx);
        let mut c = vec![T::zero(); n_coeffs(self.dim(), l)];
        c[idx] = T::one();
        self.synthesize_values(&c).expect("degree within grid")
    }
}

/// `(1/sqrt(2 pi), 1/sqrt(pi))`.
fn circle_norms<T: Real>() -> (T, T) {
    let pi = T::pi();
    (T::one() / (lit::<T>(2.0) * pi).sqrt(), T::one() / pi.sqrt())
}

/// Evaluates an expansion of the given degree at a unit vector, without
/// reference to any grid.
pub fn eval_expansion<T: Real>(dim: usize, coeffs: &[T], degree: usize, dir: &Vec3<T>) -> T {
    if dim == 2 {
        let (c0, rpi) = circle_norms::<T>();
        let t = dir[1].atan2(dir[0]);
        let mut v = coeffs[0] * c0;
        for k in 1..=degree {
            let (s, c) = (t * cast::<T>(k)).sin_cos();
            v += (coeffs[2 * k] * c + coeffs[2 * k - 1] * s) * rpi;
        }
        return v;
    }
    let x = dir[2].clamp(-T::one(), T::one());
    let s = dir[0].hypot(dir[1]);
    let phi = dir[1].atan2(dir[0]);
    let mut p = vec![T::zero(); tri_len(degree)];
    normalized_plm(x, s, degree, &mut p);
    let sqrt2 = lit::<T>(2.0).sqrt();
    let mut v = T::zero();
    for m in 0..=degree {
        let (sn, c) = (phi * cast::<T>(m)).sin_cos();
        for l in m..=degree {
            let pv = p[tri(l, m)];
            if m == 0 {
                v += coeffs[l * l + l] * pv;
            } else {
                v += sqrt2 * pv * (coeffs[l * l + l + m] * c + coeffs[l * l + l - m] * sn);
            }
        }
    }
    v
}
