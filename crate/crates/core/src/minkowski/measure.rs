use std::sync::Arc;

use crate::body::{Body, MeasureKind};
use crate::error::{HbmError, Result};
use crate::scalar::{lit, Real};
use crate::sphere::{coeff_index, eval_expansion, n_coeffs, SphereGrid, Vec3};

/// Even, nonnegative density with respect to the round measure.
#[derive(Clone, Debug)]
pub struct TargetMeasure<T: Real> {
    grid: Arc<SphereGrid<T>>,
    pub density: Vec<T>,
    pub total: T,
    /// Harmonic coefficients of the density when it has a finite expansion;
    /// needed for off-grid evaluation.
    pub coeffs: Option<Vec<T>>,
}

impl<T: Real> TargetMeasure<T> {
    pub fn from_density(grid: Arc<SphereGrid<T>>, density: Vec<T>) -> Result<Self> {
        if density.len() != grid.len() {
            return Err(HbmError::DimensionMismatch {
                expected: grid.len(),
                got: density.len(),
            });
        }
        let total = grid.integrate(&density);
        let mu = Self {
            grid,
            density,
            total,
            coeffs: None,
        };
        mu.validate()?;
        Ok(mu)
    }

    /// The round measure on the sphere.
    pub fn uniform(grid: Arc<SphereGrid<T>>) -> Self {
        let n = grid.len();
        let mut coeffs = vec![T::zero(); 1];
        coeffs[0] = grid.area().sqrt();
        Self {
            total: grid.area(),
            density: vec![T::one(); n],
            coeffs: Some(coeffs),
            grid,
        }
    }

    pub fn from_coeffs(grid: Arc<SphereGrid<T>>, coeffs: Vec<T>) -> Result<Self> {
        let density = grid.synthesize_values(&coeffs)?;
        let mut mu = Self::from_density(grid, density)?;
        mu.coeffs = Some(coeffs);
        Ok(mu)
    }

    /// `S_p K`.
    pub fn from_body(k: &Body<T>, p: f64) -> Result<Self> {
        let m = k.measure(MeasureKind::LpSurface(p));
        Self::from_density(k.grid().clone(), m.density)
    }

    pub fn grid(&self) -> &Arc<SphereGrid<T>> {
        &self.grid
    }

    pub fn is_uniform(&self) -> bool {
        let d0 = self.density[0];
        self.density
            .iter()
            .all(|&d| (d - d0).abs() <= lit::<T>(1e-14) * d0.abs())
    }

    /// Density at an arbitrary direction; requires a finite expansion.
    pub fn eval_dir(&self, dir: &Vec3<T>) -> Result<T> {
        let c = self.coeffs.as_ref().ok_or_else(|| {
            HbmError::InvalidMeasure("density has no harmonic expansion for off-grid evaluation".into())
        })?;
        let degree = crate::sphere::degree_order(self.grid.dim(), c.len() - 1).0;
        Ok(eval_expansion(self.grid.dim(), c, degree, dir))
    }

    fn validate(&self) -> Result<()> {
        let max = self.density.iter().fold(T::zero(), |m, &d| m.max(d.abs()));
        if self.density.iter().any(|&d| !d.is_finite() || d < T::zero()) {
            return Err(HbmError::InvalidMeasure(
                "density must be finite and nonnegative".into(),
            ));
        }
        if !(self.total > T::zero()) {
            return Err(HbmError::InvalidMeasure("total mass must be positive".into()));
        }
        let tol = lit::<T>(1e-10) * max;
        for k in 0..self.grid.len() {
            if (self.density[k] - self.density[self.grid.antipode(k)]).abs() > tol {
                return Err(HbmError::InvalidMeasure("density is not even".into()));
            }
        }
        // Not concentrated on a great subsphere: every closed hemisphere
        // carries mass.
        let probe = SphereGrid::<T>::new(self.grid.dim(), 8)?;
        for u in probe.nodes() {
            let m = self.grid.integrate_with(|k| {
                let t = self.grid.nodes()[k];
                (t[0] * u[0] + t[1] * u[1] + t[2] * u[2]).max(T::zero()) * self.density[k]
            });
            if !(m > T::zero()) {
                return Err(HbmError::InvalidMeasure(
                    "measure is concentrated on a great subsphere".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Parses densities such as `1+0.3*Y20` or `2 - 0.5*Y4-2 + Y22`.
///
/// `Ylm` is the real harmonic of degree `l` and order `m` scaled to unit
/// maximum. On S^1, `Yk0` is `cos(k t)` and `Yk1` is `sin(k t)`. A negative
/// order is written with a sign directly after the degree digit, so degrees
/// are limited to a single digit.
pub fn parse_density<T: Real>(grid: &SphereGrid<T>, expr: &str) -> Result<Vec<T>> {
    let dim = grid.dim();
    let bad = |msg: &str| HbmError::InvalidSpec(format!("density expression {expr:?}: {msg}"));
    let s: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(bad("empty"));
    }
    // Split into signed terms at +/- that are not part of an order or exponent.
    let bytes = s.as_bytes();
    let mut terms = Vec::new();
    let mut start = 0;
    for i in 1..bytes.len() {
        let c = bytes[i];
        if (c == b'+' || c == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'*') {
            let after_degree = i >= 2 && bytes[i - 2] == b'Y' && bytes[i - 1].is_ascii_digit();
            if !after_degree {
                terms.push(&s[start..i]);
                start = i;
            }
        }
    }
    terms.push(&s[start..]);

    let mut parts: Vec<(f64, Option<(usize, i64)>)> = Vec::new();
    for term in terms {
        let (sign, body) = match term.as_bytes()[0] {
            b'+' => (1.0, &term[1..]),
            b'-' => (-1.0, &term[1..]),
            _ => (1.0, term),
        };
        let (coef, harm) = match body.find('Y') {
            None => (body.parse::<f64>().map_err(|_| bad("bad number"))?, None),
            Some(pos) => {
                let c = if pos == 0 {
                    1.0
                } else {
                    let num = body[..pos]
                        .strip_suffix('*')
                        .ok_or_else(|| bad("expected '*' before Y"))?;
                    num.parse::<f64>().map_err(|_| bad("bad number"))?
                };
                let spec = &body[pos + 1..];
                let mut chars = spec.chars();
                let l = chars
                    .next()
                    .and_then(|c| c.to_digit(10))
                    .ok_or_else(|| bad("missing degree"))? as usize;
                let m: i64 = chars.as_str().parse().map_err(|_| bad("missing order"))?;
                (c, Some((l, m)))
            }
        };
        parts.push((sign * coef, harm));
    }
    let degree = parts.iter().filter_map(|p| p.1.map(|h| h.0)).max().unwrap_or(0);
    if degree > grid.max_exact_degree() {
        return Err(bad("degree exceeds grid resolution"));
    }
    let mut coeffs = vec![T::zero(); n_coeffs(dim, degree)];
    for (c, harm) in parts {
        match harm {
            None => coeffs[0] += lit::<T>(c) * grid.area().sqrt(),
            Some((l, m)) => {
                let idx = if dim == 2 {
                    match m {
                        0 if l == 0 => 0,
                        0 => coeff_index(2, l, l as i64),
                        1 if l > 0 => coeff_index(2, l, -(l as i64)),
                        _ => return Err(bad("on S^1 the order must be 0 (cos) or 1 (sin)")),
                    }
                } else {
                    if m.unsigned_abs() as usize > l {
                        return Err(bad("order exceeds degree"));
                    }
                    coeff_index(3, l, m)
                };
                let mut unit = vec![T::zero(); n_coeffs(dim, l)];
                unit[idx] = T::one();
                let peak = harmonic_peak(dim, &unit, l);
                coeffs[idx] += lit::<T>(c) / peak;
            }
        }
    }
    Ok(coeffs)
}

/// Maximum of `|Y|` over the sphere, from a fine colatitude-longitude scan.
fn harmonic_peak<T: Real>(dim: usize, unit: &[T], l: usize) -> T {
    let n = 720;
    let mut best = T::zero();
    let pi = T::pi();
    for i in 0..=n {
        let a = pi * lit::<T>(i as f64 / n as f64);
        if dim == 2 {
            for b in [a, a + pi] {
                let v = eval_expansion(dim, unit, l, &[b.cos(), b.sin(), T::zero()]);
                best = best.max(v.abs());
            }
        } else {
            for j in 0..=(4 * l.max(1)) {
                let phi = pi * lit::<T>(j as f64 / (2 * l.max(1)) as f64);
                let dir = [a.sin() * phi.cos(), a.sin() * phi.sin(), a.cos()];
                best = best.max(eval_expansion(dim, unit, l, &dir).abs());
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_zonal_density() {
        let g = SphereGrid::<f64>::new(3, 16).unwrap();
        let c = parse_density(&g, "1+0.3*Y20").unwrap();
        // 1 + 0.3 P_2(cos t) at the north pole is 1.3.
        let v = eval_expansion(3, &c, 2, &[0.0, 0.0, 1.0]);
        assert!((v - 1.3).abs() < 1e-12);
        let g2 = SphereGrid::<f64>::new(2, 32).unwrap();
        let c2 = parse_density(&g2, "1 - 0.3*Y20").unwrap();
        assert!((eval_expansion(2, &c2, 2, &[1.0, 0.0, 0.0]) - 0.7).abs() < 1e-12);
        assert!(parse_density(&g2, "1+Y21+Y2-1").is_err());
        assert!(parse_density(&g, "1+0.2*Y2-2").is_ok());
        assert!(parse_density(&g, "1+*").is_err());
    }

    #[test]
    fn rejects_odd_and_negative() {
        let g = Arc::new(SphereGrid::<f64>::new(3, 12).unwrap());
        let c = parse_density(&g, "1+0.5*Y10").unwrap();
        assert!(matches!(
            TargetMeasure::from_coeffs(g.clone(), c),
            Err(HbmError::InvalidMeasure(_))
        ));
        let c = parse_density(&g, "1+3*Y20").unwrap();
        assert!(matches!(
            TargetMeasure::from_coeffs(g, c),
            Err(HbmError::InvalidMeasure(_))
        ));
    }
}
