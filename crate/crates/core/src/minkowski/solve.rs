use serde::Serialize;

use super::lbfgs::Lbfgs;
use super::{el_residual_field, first_variation_field, functional_field, log_functional_field, TargetMeasure};
use crate::body::{Body, SupportField, CURVATURE_FLOOR};
use crate::error::{HbmError, Result};
use crate::scalar::{cast, dot, lit, to_f64, Real};
use crate::sphere::{degree_order, n_coeffs};

#[derive(Clone, Debug, Serialize)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Bound on the sup norm of the coefficient gradient.
    pub grad_tol: f64,
    pub el_tol: f64,
    pub memory: usize,
    /// Harmonic degree of `log h`; defaults to the grid's largest even degree.
    pub degree: Option<usize>,
    pub max_backtracks: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            grad_tol: 1e-8,
            el_tol: 1e-5,
            memory: 12,
            degree: None,
            max_backtracks: 40,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    /// No descent step was found although the tolerances are not met.
    Stalled,
    /// The discrete problem is solved to round-off but the pointwise
    /// residual is above tolerance; the grid is too coarse for the solution.
    ResolutionLimited,
}

#[derive(Clone, Debug)]
pub struct SolveReport<T: Real> {
    pub body: Body<T>,
    pub p: T,
    pub c: T,
    pub el_residual: T,
    /// `F_{mu,p}` (or `G_{mu,0}`) after each accepted step.
    pub objective_trace: Vec<T>,
    pub d_g: T,
    pub status: SolveStatus,
    pub iterations: usize,
    pub grad_norm: T,
    /// Smallest eigenvalue of `D^2 h` relative to the mean eigenvalue.
    pub curvature_margin: T,
}

impl<T: Real> SolveReport<T> {
    pub fn converged(&self) -> bool {
        self.status == SolveStatus::Converged
    }
}

struct Problem<'a, T: Real> {
    mu: &'a TargetMeasure<T>,
    p: T,
    sign: T,
    degree: usize,
    vars: Vec<usize>,
}

struct Point<T: Real> {
    x: Vec<T>,
    sf: SupportField<T>,
    j: T,
    grad: Vec<T>,
}

impl<T: Real> Problem<'_, T> {
    /// `None` when `exp(u)` violates the curvature floor.
    fn eval(&self, x: Vec<T>) -> Result<Option<Point<T>>> {
        let grid = self.mu.grid();
        let dim = grid.dim();
        let sf = SupportField::new(grid.synthesize(&x)?.exp(), dim);
        let (min_eig, mean) = sf.curvature_range(dim);
        if !(min_eig >= lit::<T>(CURVATURE_FLOOR) * mean) {
            return Ok(None);
        }
        let j = self.sign * log_functional_field(grid, &sf, self.mu, self.p);
        if !j.is_finite() {
            return Ok(None);
        }
        let g: Vec<T> = first_variation_field(grid, &sf, self.mu, self.p)
            .into_iter()
            .map(|v| v * self.sign)
            .collect();
        let full = grid.analyze(&g, self.degree)?;
        let grad = self.vars.iter().map(|&i| full[i]).collect();
        Ok(Some(Point { x, sf, j, grad }))
    }

    fn step(&self, x: &[T], d: &[T], alpha: T) -> Vec<T> {
        let mut out = x.to_vec();
        for (&i, &di) in self.vars.iter().zip(d) {
            out[i] += alpha * di;
        }
        out
    }
}

fn sup_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Quasi-Newton descent on `sign(p) G_{mu,p}` over the even coefficients of
/// `log h`, with the volume held at one. Returns a report whatever the
/// final status; see [`solve`] for the strict variant.
pub fn run<T: Real>(mu: &TargetMeasure<T>, p: T, init: &Body<T>, opts: &SolveOptions) -> Result<SolveReport<T>> {
    let grid = mu.grid().clone();
    let dim = grid.dim();
    let n: T = cast(dim);
    if !(p < T::one()) {
        return Err(HbmError::PreconditionUnmet(format!(
            "solver requires p < 1, got {}",
            to_f64(p)
        )));
    }
    if !(p > -n) {
        return Err(HbmError::PreconditionUnmet(format!(
            "no minimizers exist for p <= -n (p = {}); use the supercritical diagnostic",
            to_f64(p)
        )));
    }
    if init.dim() != dim || init.grid().len() != grid.len() {
        return Err(HbmError::DimensionMismatch {
            expected: grid.len(),
            got: init.grid().len(),
        });
    }
    let degree = opts.degree.unwrap_or_else(|| grid.max_even_degree());
    if degree > grid.max_exact_degree() {
        return Err(HbmError::DegreeTooHigh {
            requested: degree,
            max: grid.max_exact_degree(),
        });
    }
    let nc = n_coeffs(dim, degree);
    let mut vars = Vec::new();
    let mut diag = Vec::new();
    for i in 1..nc {
        let l = degree_order(dim, i).0;
        if l.is_multiple_of(2) {
            vars.push(i);
            diag.push(T::one() / cast::<T>(1 + l * (l + dim - 2)));
        }
    }
    let sign = if p < T::zero() { -T::one() } else { T::one() };
    let problem = Problem {
        mu,
        p,
        sign,
        degree,
        vars,
    };
    let root_area = grid.area().sqrt();

    let log_h: Vec<T> = init.h_values().iter().map(|v| v.ln()).collect();
    let mut x = grid.analyze(&log_h, degree)?;
    for (i, c) in x.iter_mut().enumerate() {
        if degree_order(dim, i).0 % 2 == 1 {
            *c = T::zero();
        }
    }
    let mut cur = match problem.eval(x)? {
        Some(pt) => pt,
        None => return Err(HbmError::ConvexityBarrier),
    };
    normalize_volume(&grid, &mut cur, root_area, n);

    let mut lbfgs = Lbfgs::new(diag.clone(), opts.memory);
    let mut trace = vec![functional_field(&grid, &cur.sf, mu, p)];
    let grad_tol = lit::<T>(opts.grad_tol);
    let el_tol = lit::<T>(opts.el_tol);
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;
    let mut any_feasible = true;
    while iterations < opts.max_iter {
        let gnorm = sup_norm(&cur.grad);
        let (el, _) = el_residual_field(&grid, &cur.sf, mu, p);
        if gnorm < grad_tol && el < el_tol {
            status = SolveStatus::Converged;
            break;
        }
        if gnorm < lit::<T>(1e-3) * grad_tol {
            status = SolveStatus::ResolutionLimited;
            break;
        }
        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                if lbfgs.is_empty() {
                    break;
                }
                lbfgs.reset();
            }
            let mut d = lbfgs.direction(&cur.grad);
            let mut slope = dot(&cur.grad, &d);
            if !(slope < T::zero()) {
                lbfgs.reset();
                d = lbfgs.direction(&cur.grad);
                slope = dot(&cur.grad, &d);
            }
            // Keep the change of log h per step moderate.
            let cap = lit::<T>(0.25) / sup_norm(&d).max(lit(1e-300));
            let mut alpha = if lbfgs.is_empty() {
                cap.min(T::one())
            } else {
                T::one().min(cap)
            };
            let slack = lit::<T>(8.0 * f64::EPSILON) * cur.j.abs().max(T::one());
            any_feasible = false;
            for _ in 0..opts.max_backtracks {
                if let Some(pt) = problem.eval(problem.step(&cur.x, &d, alpha))? {
                    any_feasible = true;
                    if pt.j <= cur.j + lit::<T>(1e-4) * alpha * slope + slack {
                        accepted = Some((pt, d.iter().map(|&v| v * alpha).collect::<Vec<T>>()));
                        break;
                    }
                }
                alpha *= lit(0.5);
            }
            if accepted.is_some() {
                break;
            }
        }
        let Some((mut next, s)) = accepted else {
            if !any_feasible {
                return Err(HbmError::ConvexityBarrier);
            }
            status = SolveStatus::Stalled;
            break;
        };
        let y: Vec<T> = next.grad.iter().zip(&cur.grad).map(|(&a, &b)| a - b).collect();
        lbfgs.push(s, y);
        normalize_volume(&grid, &mut next, root_area, n);
        cur = next;
        iterations += 1;
        trace.push(functional_field(&grid, &cur.sf, mu, p));
    }
    if iterations == opts.max_iter {
        let (el, _) = el_residual_field(&grid, &cur.sf, mu, p);
        if sup_norm(&cur.grad) < grad_tol && el < el_tol {
            status = SolveStatus::Converged;
        }
    }

    let values = cur.sf.values();
    let meta = serde_json::json!({ "source": "minkowski_solve", "p": to_f64(p) });
    let body = Body::from_node_values(grid.clone(), &values, degree, meta)?;
    let (el_residual, c) = super::el_residual(&body, mu, p);
    let (min_eig, mean) = cur.sf.curvature_range(dim);
    Ok(SolveReport {
        d_g: body.geometric_distance(),
        body,
        p,
        c,
        el_residual,
        objective_trace: trace,
        status,
        iterations,
        grad_norm: sup_norm(&cur.grad),
        curvature_margin: min_eig / mean,
    })
}

/// Rescales the iterate to unit volume; `J` and its gradient are
/// scale invariant, so only `x_0` and the node field change.
fn normalize_volume<T: Real>(grid: &crate::sphere::SphereGrid<T>, pt: &mut Point<T>, root_area: T, n: T) {
    let v = grid.integrate(&pt.sf.cone_volume_density(grid.dim()));
    let shift = -v.ln() / n;
    pt.x[0] += shift * root_area;
    let s = shift.exp();
    let h = pt.sf.h.scale(s);
    pt.sf = SupportField::new(h, grid.dim());
}

/// Like [`run`] but fails with `NotConverged` unless the tolerances are met.
pub fn solve<T: Real>(mu: &TargetMeasure<T>, p: T, init: &Body<T>, opts: &SolveOptions) -> Result<SolveReport<T>> {
    let rep = run(mu, p, init, opts)?;
    if !rep.converged() {
        return Err(HbmError::NotConverged {
            iterations: rep.iterations,
            grad_norm: to_f64(rep.grad_norm),
            residual: to_f64(rep.el_residual),
        });
    }
    Ok(rep)
}
