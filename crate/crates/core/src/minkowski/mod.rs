//! The even `L^p` Minkowski problem: functionals, variations, solver and
//! experiments.

mod experiments;
mod lbfgs;
mod measure;
mod solve;

pub use experiments::{
    critical_divergence_scan, nonuniqueness_experiment, supercritical_diagnostic, LinearImage, NonuniqueOptions,
    NonuniqueReport, NonuniqueTrial, ScanRow, SecondVariationProbe, SupercriticalReport, SupercriticalRow,
    DEFAULT_SEPARATION,
};
pub use measure::{parse_density, TargetMeasure};
pub use solve::{run, solve, SolveOptions, SolveReport, SolveStatus};

use crate::body::{Body, SupportField};
use crate::scalar::{cast, Real};
use crate::spectral::{dirichlet_form, variance};
use crate::sphere::{Field, SphereGrid};

/// `F_{mu,p}(K) = (1/p) int h^p dmu / V(K)^{p/n}` for `p != 0`, and the
/// logarithmic functional `G_{mu,0}` for `p = 0`.
pub fn functional<T: Real>(k: &Body<T>, mu: &TargetMeasure<T>, p: T) -> T {
    functional_field(k.grid(), k.field(), mu, p)
}

/// `G_{mu,p} = log int h^p dmu - (p/n) log V(K)` for `p != 0`;
/// `int log h dmu / |mu| - (1/n) log V(K)` for `p = 0`.
pub fn log_functional<T: Real>(k: &Body<T>, mu: &TargetMeasure<T>, p: T) -> T {
    log_functional_field(k.grid(), k.field(), mu, p)
}

pub fn functional_field<T: Real>(grid: &SphereGrid<T>, sf: &SupportField<T>, mu: &TargetMeasure<T>, p: T) -> T {
    if p == T::zero() {
        return log_functional_field(grid, sf, mu, p);
    }
    let n: T = cast(grid.dim());
    let v = grid.integrate(&sf.cone_volume_density(grid.dim()));
    power_integral(grid, sf, mu, p) / (p * v.powf(p / n))
}

pub fn log_functional_field<T: Real>(grid: &SphereGrid<T>, sf: &SupportField<T>, mu: &TargetMeasure<T>, p: T) -> T {
    let n: T = cast(grid.dim());
    let v = grid.integrate(&sf.cone_volume_density(grid.dim()));
    if p == T::zero() {
        let m = grid.integrate_with(|k| sf.h.0[k].v.ln() * mu.density[k]);
        m / mu.total - v.ln() / n
    } else {
        power_integral(grid, sf, mu, p).ln() - p / n * v.ln()
    }
}

fn power_integral<T: Real>(grid: &SphereGrid<T>, sf: &SupportField<T>, mu: &TargetMeasure<T>, p: T) -> T {
    grid.integrate_with(|k| sf.h.0[k].v.powf(p) * mu.density[k])
}

/// Density `g` with `d/de G(h (1 + e z))|_0 = int z g` over the sphere.
pub fn first_variation<T: Real>(k: &Body<T>, mu: &TargetMeasure<T>, p: T) -> Vec<T> {
    first_variation_field(k.grid(), k.field(), mu, p)
}

pub fn first_variation_field<T: Real>(
    grid: &SphereGrid<T>,
    sf: &SupportField<T>,
    mu: &TargetMeasure<T>,
    p: T,
) -> Vec<T> {
    let dv = sf.cone_volume_density(grid.dim());
    let v = grid.integrate(&dv);
    if p == T::zero() {
        return (0..dv.len()).map(|k| mu.density[k] / mu.total - dv[k] / v).collect();
    }
    let hp: Vec<T> = (0..dv.len()).map(|k| sf.h.0[k].v.powf(p) * mu.density[k]).collect();
    let i = grid.integrate(&hp);
    (0..dv.len()).map(|k| p * (hp[k] / i - dv[k] / v)).collect()
}

/// Second variation of `G_{S_p K, p}` at `K` in the direction `z`. At
/// `p = 0` this is the second variation of the logarithmic functional, the
/// limit of the `p != 0` expression divided by `p`.
pub fn second_variation<T: Real>(k: &Body<T>, p: T, z: &Field<T>) -> T {
    let n: T = cast(k.dim());
    let q = dirichlet_form(k, z, z) - (n - p) * variance(k, z);
    let v = k.volume();
    if p == T::zero() {
        q / v
    } else {
        p / v * q
    }
}

/// `(residual, c)`: half the `L^1` distance between the normalized densities
/// of `S_p K` and `mu`, and the ratio of their total masses.
pub fn el_residual<T: Real>(k: &Body<T>, mu: &TargetMeasure<T>, p: T) -> (T, T) {
    el_residual_field(k.grid(), k.field(), mu, p)
}

pub fn el_residual_field<T: Real>(grid: &SphereGrid<T>, sf: &SupportField<T>, mu: &TargetMeasure<T>, p: T) -> (T, T) {
    let e = T::one() - p;
    let sp: Vec<T> = sf.h.0.iter().zip(&sf.det).map(|(j, &d)| j.v.powf(e) * d).collect();
    let total = grid.integrate(&sp);
    let half: T = cast::<T>(1) / cast(2);
    let r = grid.integrate_with(|k| (sp[k] / total - mu.density[k] / mu.total).abs()) * half;
    (r, total / mu.total)
}

/// `max(h_K / h_L) * max(h_L / h_K)`: the geometric distance between `K` and
/// `L` after the best rescaling.
pub fn relative_distance<T: Real>(k: &Body<T>, l: &Body<T>) -> T {
    let a = k.field().h.0.iter();
    let (up, down) = a.zip(&l.field().h.0).fold((T::zero(), T::zero()), |(u, d), (x, y)| {
        (u.max(x.v / y.v), d.max(y.v / x.v))
    });
    up * down
}
