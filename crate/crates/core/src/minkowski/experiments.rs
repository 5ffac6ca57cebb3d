use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::solve::{run, SolveOptions, SolveReport, SolveStatus};
use super::{el_residual, relative_distance, second_variation, TargetMeasure};
use crate::body::{random_log_coeffs, Body};
use crate::error::{HbmError, Result};
use crate::scalar::{cast, lit, to_f64, Real};
use crate::spectral::Spectral;
use crate::sphere::{coeff_index, Field, Vec3};

/// Minimal excess of the rescaled distance for two solutions to count as
/// distinct.
pub const DEFAULT_SEPARATION: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct NonuniqueOptions {
    pub n_init: usize,
    pub seed: u64,
    pub separation: f64,
    /// Run the initializers in order and stop at the first separated
    /// solution instead of running all of them in parallel.
    pub stop_at_first: bool,
}

impl Default for NonuniqueOptions {
    fn default() -> Self {
        Self {
            n_init: 8,
            seed: 0,
            separation: DEFAULT_SEPARATION,
            stop_at_first: false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NonuniqueTrial {
    pub seed: u64,
    pub init: String,
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
    pub el_residual: f64,
    pub c: f64,
    pub separation: f64,
    pub d_g: f64,
    pub iterations: usize,
    pub objective: f64,
}

#[derive(Clone, Debug)]
pub struct NonuniqueReport<T: Real> {
    pub p: T,
    pub lambda1_even: T,
    pub separation_threshold: T,
    pub k1_objective: T,
    pub trials: Vec<NonuniqueTrial>,
    /// Index into `trials` and the distinct solution, if one was found.
    pub found: Option<(usize, Body<T>)>,
}

impl<T: Real> NonuniqueReport<T> {
    /// The distinct solution, or `SeparationNotFound`.
    pub fn distinct(&self) -> Result<&Body<T>> {
        self.found.as_ref().map(|(_, b)| b).ok_or_else(|| {
            HbmError::SeparationNotFound(format!(
                "none of {} initializers reached a separated solution at p = {}",
                self.trials.len(),
                to_f64(self.p)
            ))
        })
    }
}

/// Looks for `K_2 != K_1` with `S_p K_2 = S_p K_1` by descending from
/// initializers pushed away from `K_1`. The first two follow the unstable
/// eigendirection of `-Delta_{K_1}`; the rest are random even
/// perturbations.
pub fn nonuniqueness_experiment<T: Real>(
    k1: &Body<T>,
    p: T,
    spectral: &Spectral<T>,
    opts: &SolveOptions,
    exp: &NonuniqueOptions,
) -> Result<NonuniqueReport<T>> {
    let separation: T = lit(exp.separation);
    let n: T = cast(k1.dim());
    if !(p > -n) {
        return Err(HbmError::PreconditionUnmet(format!(
            "p must exceed -n, got {}",
            to_f64(p)
        )));
    }
    let asm = spectral.assemble(k1)?;
    let eig = crate::spectral::lambda1_even(&asm)?;
    if !(eig.value < n - p) {
        return Err(HbmError::PreconditionUnmet(format!(
            "lambda_1,e = {} is not below n - p = {}",
            to_f64(eig.value),
            to_f64(n - p)
        )));
    }
    let mu = TargetMeasure::from_body(k1, to_f64(p))?;
    let z = asm.trial.field(&eig.eigenvector);
    let k1_objective = super::functional(k1, &mu, p);

    let run_trial = |i: usize| -> (NonuniqueTrial, Option<SolveReport<T>>) {
        let trial_seed = exp.seed.wrapping_add(i as u64);
        let (label, init) = match initializer(k1, &z, i, trial_seed) {
            Ok(v) => v,
            Err(e) => return (failed_trial(trial_seed, "initializer", e), None),
        };
        match run(&mu, p, &init, opts) {
            Ok(rep) => {
                let (r, c) = el_residual(&rep.body, &mu, p);
                let trial = NonuniqueTrial {
                    seed: trial_seed,
                    init: label,
                    status: Some(rep.status),
                    error: None,
                    el_residual: to_f64(r),
                    c: to_f64(c),
                    separation: to_f64(relative_distance(&rep.body, k1)),
                    d_g: to_f64(rep.d_g),
                    iterations: rep.iterations,
                    objective: rep.objective_trace.last().map(|&v| to_f64(v)).unwrap_or(f64::NAN),
                };
                (trial, Some(rep))
            }
            Err(e) => (failed_trial(trial_seed, &label, e), None),
        }
    };
    let threshold = 1.0 + exp.separation;
    let accepts = |t: &NonuniqueTrial| {
        t.status == Some(SolveStatus::Converged) && t.el_residual < opts.el_tol && t.separation > threshold
    };
    let results: Vec<(NonuniqueTrial, Option<SolveReport<T>>)> = if exp.stop_at_first {
        let mut out = Vec::new();
        for i in 0..exp.n_init {
            let r = run_trial(i);
            let done = accepts(&r.0);
            out.push(r);
            if done {
                break;
            }
        }
        out
    } else {
        (0..exp.n_init).into_par_iter().map(run_trial).collect()
    };

    let mut found = None;
    let mut trials = Vec::with_capacity(results.len());
    for (i, (trial, rep)) in results.into_iter().enumerate() {
        if accepts(&trial) && found.is_none() {
            found = rep.map(|r| (i, r.body));
        }
        trials.push(trial);
    }
    Ok(NonuniqueReport {
        p,
        lambda1_even: eig.value,
        separation_threshold: separation,
        k1_objective,
        trials,
        found,
    })
}

fn failed_trial(seed: u64, init: &str, e: HbmError) -> NonuniqueTrial {
    NonuniqueTrial {
        seed,
        init: init.to_string(),
        status: None,
        error: Some(e.to_string()),
        el_residual: f64::NAN,
        c: f64::NAN,
        separation: f64::NAN,
        d_g: f64::NAN,
        iterations: 0,
        objective: f64::NAN,
    }
}

fn initializer<T: Real>(k1: &Body<T>, z: &Field<T>, i: usize, seed: u64) -> Result<(String, Body<T>)> {
    let grid = k1.grid().clone();
    let hk = k1.h_values();
    let (label, log_pert): (String, Vec<T>) = if i < 2 {
        let zmax = z.values().iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let s = if i == 0 { T::one() } else { -T::one() };
        (
            "eigendirection".into(),
            z.values().iter().map(|&v| s * v / zmax).collect(),
        )
    } else {
        let c = random_log_coeffs::<T>(grid.dim(), 6, seed, 1.0);
        ("random_even".into(), grid.synthesize_values(&c)?)
    };
    let mut amp = lit::<T>(0.5);
    for _ in 0..6 {
        let values: Vec<T> = hk.iter().zip(&log_pert).map(|(&h, &w)| h * (amp * w).exp()).collect();
        let meta = serde_json::json!({ "init": label, "seed": seed });
        if let Ok(b) = Body::from_node_values(grid.clone(), &values, k1.degree(), meta) {
            return Ok((label, b));
        }
        amp *= lit(0.5);
    }
    Err(HbmError::ConvexityBarrier)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub p: f64,
    pub d_g: f64,
    pub el_residual: f64,
    pub lambda_even: f64,
    pub objective: f64,
    pub status: Option<SolveStatus>,
    pub error: Option<String>,
}

/// Solves `S_p K = c mu` along a list of exponents, warm-starting each row
/// from the previous solution.
pub fn critical_divergence_scan<T: Real>(
    mu: &TargetMeasure<T>,
    p_list: &[T],
    init: &Body<T>,
    spectral: &Spectral<T>,
    opts: &SolveOptions,
) -> Result<Vec<ScanRow>> {
    let n: T = cast(mu.grid().dim());
    if let Some(&bad) = p_list.iter().find(|&&p| !(p > -n && p < T::zero())) {
        return Err(HbmError::InvalidSpec(format!(
            "scan exponents must lie in (-n, 0), got {}",
            to_f64(bad)
        )));
    }
    let mut start = init.clone();
    let mut rows = Vec::with_capacity(p_list.len());
    for &p in p_list {
        let row = match run(mu, p, &start, opts) {
            Ok(rep) => {
                let lambda = spectral
                    .lambda1_even(&rep.body)
                    .map(|e| to_f64(e.value))
                    .unwrap_or(f64::NAN);
                let row = ScanRow {
                    p: to_f64(p),
                    d_g: to_f64(rep.d_g),
                    el_residual: to_f64(rep.el_residual),
                    lambda_even: lambda,
                    objective: rep.objective_trace.last().map(|&v| to_f64(v)).unwrap_or(f64::NAN),
                    status: Some(rep.status),
                    error: None,
                };
                start = rep.body;
                row
            }
            Err(e) => ScanRow {
                p: to_f64(p),
                d_g: f64::NAN,
                el_residual: f64::NAN,
                lambda_even: f64::NAN,
                objective: f64::NAN,
                status: None,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(rows)
}

/// The body `T K`, kept as a base body and a matrix so that integrals over
/// strongly eccentric images can be computed by a change of variables on
/// the base grid instead of resolving `h_{TK}` directly.
#[derive(Clone, Debug)]
pub struct LinearImage<T: Real> {
    pub base: Body<T>,
    pub t: DMatrix<T>,
}

impl<T: Real> LinearImage<T> {
    /// `diag(t, 1/t)` in the plane, `diag(t, 1/t, 1)` in space.
    pub fn stretch(base: Body<T>, t: T) -> Self {
        let dim = base.dim();
        let mut m = DMatrix::identity(dim, dim);
        m[(0, 0)] = t;
        m[(1, 1)] = T::one() / t;
        Self { base, t: m }
    }

    pub fn volume(&self) -> T {
        self.t.determinant().abs() * self.base.volume()
    }

    pub fn polar_volume(&self) -> T {
        self.base.polar_volume() / self.t.determinant().abs()
    }

    /// `|T^{-T} w|` at every base node. With `A = T^{-T}` the map
    /// `w -> A w / |A w|` carries the base grid onto the sphere, and
    /// `h_{TK}(A w / |A w|) = h_K(w) / |A w|`.
    fn stretch_factors(&self) -> Result<(DMatrix<T>, Vec<T>)> {
        let a = self
            .t
            .clone()
            .try_inverse()
            .ok_or_else(|| HbmError::InvalidSpec("linear map is singular".into()))?
            .transpose();
        let dim = self.base.dim();
        let norms = self
            .base
            .grid()
            .nodes()
            .iter()
            .map(|w| {
                (0..dim)
                    .map(|i| {
                        let s = (0..dim).fold(T::zero(), |acc, j| acc + a[(i, j)] * w[j]);
                        s * s
                    })
                    .fold(T::zero(), |acc, x| acc + x)
                    .sqrt()
            })
            .collect();
        Ok((a, norms))
    }

    pub fn geometric_distance(&self) -> Result<T> {
        let (_, norms) = self.stretch_factors()?;
        let h = self.base.h_values();
        let (lo, hi) = h
            .iter()
            .zip(&norms)
            .fold((T::max_value().unwrap(), T::zero()), |(lo, hi), (&x, &s)| {
                (lo.min(x / s), hi.max(x / s))
            });
        Ok(hi / lo)
    }

    /// `int h_{TK}^p dmu`, via `dtheta = |det A| |A w|^{-n} dw`.
    pub fn power_integral(&self, mu: &TargetMeasure<T>, p: T) -> Result<T> {
        let (a, norms) = self.stretch_factors()?;
        let dim = self.base.dim();
        let n: T = cast(dim);
        let det_a = a.determinant().abs();
        let h = self.base.h_values();
        let uniform = mu.is_uniform();
        let grid = self.base.grid();
        let mut density = Vec::with_capacity(h.len());
        for (k, w) in grid.nodes().iter().enumerate() {
            let f = if uniform {
                mu.density[0]
            } else {
                let mut th: Vec3<T> = [T::zero(); 3];
                for i in 0..dim {
                    th[i] = (0..dim).fold(T::zero(), |acc, j| acc + a[(i, j)] * w[j]) / norms[k];
                }
                mu.eval_dir(&th)?
            };
            density.push(f * h[k].powf(p) * norms[k].powf(-p - n));
        }
        Ok(det_a * grid.integrate(&density))
    }

    pub fn functional(&self, mu: &TargetMeasure<T>, p: T) -> Result<T> {
        if p == T::zero() {
            return Err(HbmError::InvalidSpec("supercritical diagnostic needs p != 0".into()));
        }
        let n: T = cast(self.base.dim());
        Ok(self.power_integral(mu, p)? / (p * self.volume().powf(p / n)))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SupercriticalRow {
    pub index: usize,
    pub d_g: f64,
    pub volume: f64,
    pub functional: f64,
    pub neg_functional: f64,
    pub mahler: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SecondVariationProbe {
    pub degree: usize,
    pub value: f64,
    /// `delta^2 G / p`; negative means the base body is not a local
    /// minimum of `F` in this direction.
    pub over_p: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SupercriticalReport {
    pub p: f64,
    pub rows: Vec<SupercriticalRow>,
    /// Whether `-F` increases strictly along the rows.
    pub coercive_trend: bool,
    pub probes: Vec<SecondVariationProbe>,
}

/// Evaluates `-F_{mu,p}` along a path of linear images and the second
/// variation of `G_{S_p K,p}` at the first body in zonal directions.
pub fn supercritical_diagnostic<T: Real>(
    mu: &TargetMeasure<T>,
    p: T,
    path: &[LinearImage<T>],
) -> Result<SupercriticalReport> {
    let n: T = cast(mu.grid().dim());
    if !(p <= -n) {
        return Err(HbmError::PreconditionUnmet(format!(
            "supercritical diagnostic needs p <= -n, got {}",
            to_f64(p)
        )));
    }
    let mut rows = Vec::with_capacity(path.len());
    for (index, img) in path.iter().enumerate() {
        let f = img.functional(mu, p)?;
        rows.push(SupercriticalRow {
            index,
            d_g: to_f64(img.geometric_distance()?),
            volume: to_f64(img.volume()),
            functional: to_f64(f),
            neg_functional: -to_f64(f),
            mahler: to_f64(img.volume() * img.polar_volume()),
        });
    }
    let coercive_trend = rows.windows(2).all(|w| w[1].neg_functional > w[0].neg_functional);
    let mut probes = Vec::new();
    if let Some(first) = path.first() {
        let k = &first.base;
        let grid = k.grid();
        let dim = k.dim();
        for l in [2usize, 4, 6] {
            if l > k.degree() {
                break;
            }
            let mut c = vec![T::zero(); grid.n_coeffs(l)];
            c[coeff_index(dim, l, if dim == 2 { l as i64 } else { 0 })] = T::one();
            let z = grid.synthesize(&c)?;
            let value = second_variation(k, p, &z);
            probes.push(SecondVariationProbe {
                degree: l,
                value: to_f64(value),
                over_p: to_f64(value / p),
            });
        }
    }
    Ok(SupercriticalReport {
        p: to_f64(p),
        rows,
        coercive_trend,
        probes,
    })
}
