//! Mixed volumes of differences of support functions through mixed
//! discriminants of `D^2`.

use crate::body::Body;
use crate::error::{HbmError, Result};
use crate::scalar::{cast, lit, Real};
use crate::sphere::{mixed_discriminant, Field, SphereGrid};

#[derive(Clone, Copy, Debug)]
pub struct MixedVolume<T> {
    /// Average over the choices of which entry sits outside the
    /// discriminant.
    pub value: T,
    /// Spread of those choices relative to `|value|`.
    pub asymmetry: T,
}

/// `V(f_1, ..., f_n)` for `n` fields of jets on the grid.
pub fn mixed_volume<T: Real>(grid: &SphereGrid<T>, entries: &[&Field<T>]) -> Result<MixedVolume<T>> {
    let dim = grid.dim();
    if entries.len() != dim {
        return Err(HbmError::DimensionMismatch {
            expected: dim,
            got: entries.len(),
        });
    }
    for e in entries {
        if e.len() != grid.len() {
            return Err(HbmError::DimensionMismatch {
                expected: grid.len(),
                got: e.len(),
            });
        }
    }
    let d2: Vec<_> = entries.iter().map(|e| e.d2(dim)).collect();
    let inv_n = T::one() / cast(dim);
    let parts: Vec<T> = if dim == 2 {
        (0..2)
            .map(|i| {
                let j = 1 - i;
                grid.integrate_with(|k| entries[i].0[k].v * d2[j][k].a) * inv_n
            })
            .collect()
    } else {
        (0..3)
            .map(|i| {
                let (j, l) = ((i + 1) % 3, (i + 2) % 3);
                grid.integrate_with(|k| entries[i].0[k].v * mixed_discriminant(&d2[j][k], &d2[l][k])) * inv_n
            })
            .collect()
    };
    let value = parts.iter().fold(T::zero(), |a, &b| a + b) / cast(parts.len());
    let (lo, hi) = parts
        .iter()
        .fold((parts[0], parts[0]), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let scale = value.abs().max(lit(1e-300));
    Ok(MixedVolume {
        value,
        asymmetry: (hi - lo) / scale,
    })
}

/// `V_K(f; m) = V(f h_K [m], h_K [n - m])` for `m` in `{1, 2}`.
///
/// For `m = 1` this is `int f dV_K`, computed directly.
pub fn vk_mixed<T: Real>(k: &Body<T>, f: &Field<T>, m: usize) -> Result<T> {
    match m {
        1 => {
            let dv = k.cone_volume_density();
            Ok(k.grid().integrate_with(|i| f.0[i].v * dv[i]))
        }
        2 => vk_bilinear(k, f, f),
        _ => Err(HbmError::InvalidSpec(format!(
            "V_K(f; m) is implemented for m in {{1, 2}}, got {m}"
        ))),
    }
}

/// `V_K(w, z) = V(w h_K, z h_K, h_K [n - 2])`.
pub fn vk_bilinear<T: Real>(k: &Body<T>, w: &Field<T>, z: &Field<T>) -> Result<T> {
    let wh = w.mul(k.h());
    let zh = z.mul(k.h());
    let entries: Vec<&Field<T>> = if k.dim() == 2 {
        vec![&wh, &zh]
    } else {
        vec![&wh, &zh, k.h()]
    };
    Ok(mixed_volume(k.grid(), &entries)?.value)
}

/// `V(L[1], K[n-1]) = (1/n) int h_L dS_K`.
pub fn v1<T: Real>(k: &Body<T>, l: &Body<T>) -> T {
    let det = k.curvature_det();
    let hl = l.h();
    k.grid().integrate_with(|i| hl.0[i].v * det[i]) / cast(k.dim())
}

/// `V(L[2], K[n-2])`.
pub fn v2<T: Real>(k: &Body<T>, l: &Body<T>) -> Result<T> {
    let entries: Vec<&Field<T>> = if k.dim() == 2 {
        vec![l.h(), l.h()]
    } else {
        vec![l.h(), l.h(), k.h()]
    };
    Ok(mixed_volume(k.grid(), &entries)?.value)
}

/// `V(L[1], K[n-1])^2 - V(L[2], K[n-2]) V(K)`, nonnegative by Minkowski's
/// second inequality.
pub fn minkowski2_gap<T: Real>(k: &Body<T>, l: &Body<T>) -> Result<T> {
    let a = v1(k, l);
    Ok(a * a - v2(k, l)? * k.volume())
}

/// Scale for tolerance checks on `minkowski2_gap`.
pub fn minkowski2_scale<T: Real>(k: &Body<T>, l: &Body<T>) -> T {
    let a = v1(k, l);
    (a * a).max(lit(1e-300))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::StandardBody;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn grid3() -> Arc<SphereGrid<f64>> {
        Arc::new(SphereGrid::new(3, 32).unwrap())
    }

    #[test]
    fn ball_mixed_volume() {
        let b = Body::standard(grid3(), &StandardBody::Ball { radius: 1.0 }).unwrap();
        let mv = mixed_volume(b.grid(), &[b.h(), b.h(), b.h()]).unwrap();
        assert!((mv.value - 4.0 * PI / 3.0).abs() < 1e-12);
        let two = b.h().scale(2.0);
        let mv2 = mixed_volume(b.grid(), &[&two, b.h(), b.h()]).unwrap();
        assert!((mv2.value - 8.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn vk_of_lin_squared_on_ball() {
        let b = Body::standard(grid3(), &StandardBody::Ball { radius: 1.0 }).unwrap();
        let lin = b.lin(&[0.0, 0.0, 1.0]);
        let f = lin.mul(&lin);
        let v = vk_mixed(&b, &f, 2).unwrap();
        assert!((v + 4.0 * PI / 45.0).abs() < 1e-12, "{v}");
        let one = Field::constant(b.grid().len(), 1.0);
        assert!((vk_mixed(&b, &one, 2).unwrap() - b.volume()).abs() < 1e-12);
    }

    #[test]
    fn minkowski_gap_vanishes_on_homothets() {
        let k = Body::standard(
            grid3(),
            &StandardBody::RandomEven {
                seed: 1,
                amplitude: 0.25,
            },
        )
        .unwrap();
        let ck = k.scaled(1.7).unwrap();
        assert!(minkowski2_gap(&k, &k).unwrap().abs() < 1e-12);
        assert!(minkowski2_gap(&k, &ck).unwrap().abs() < 1e-11);
    }
}
