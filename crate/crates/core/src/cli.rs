//! Command-line front end. Every command writes `report.json` and CSV tables
//! under `--out`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::affine::{isotropize, DEFAULT_MAX_ITER};
use crate::body::{Body, StandardBody};
use crate::directions::{expectation_identity, find_good_direction};
use crate::error::{HbmError, Result};
use crate::minkowski::{
    critical_divergence_scan, el_residual, nonuniqueness_experiment, parse_density, run, supercritical_diagnostic,
    LinearImage, NonuniqueOptions, SolveOptions, SolveReport, SolveStatus, TargetMeasure,
};
use crate::spectral::{lambda1, lambda1_even, spectrum, Spectral, Subspace};
use crate::sphere::{default_degree, default_resolution, SphereGrid};

pub const EXIT_INVALID_SPEC: i32 = 2;
pub const EXIT_NUMERIC_FAILURE: i32 = 3;

/// Resolution used by `nonunique` in three dimensions when none is given;
/// the eccentric second solution is not resolved to the residual tolerance
/// on the default grid.
pub const NONUNIQUE_RESOLUTION_3D: usize = 96;

#[derive(Parser, Debug)]
#[command(
    name = "hbm",
    version,
    about = "Spectral and Lp-Minkowski experiments on origin-symmetric convex bodies"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Ambient dimension, 2 or 3.
    #[arg(long, global = true, default_value_t = 3)]
    pub dim: usize,
    /// Grid resolution (nodes on the circle, colatitude rings on the sphere).
    #[arg(long, global = true)]
    pub resolution: Option<usize>,
    /// Harmonic degree of the Galerkin space.
    #[arg(long, global = true)]
    pub degree: Option<usize>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value = "hbm-out")]
    pub out: PathBuf,
    #[arg(long = "tol-el", global = true, default_value_t = 1e-5)]
    pub tol_el: f64,
    #[arg(long = "tol-grad", global = true, default_value_t = 1e-8)]
    pub tol_grad: f64,
    #[arg(long = "tol-iso", global = true, default_value_t = 1e-10)]
    pub tol_iso: f64,
    #[arg(long = "max-iter", global = true, default_value_t = 2000)]
    pub max_iter: usize,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case", tag = "name")]
pub enum Command {
    /// First eigenvalues of the operator, full and even.
    Spectrum {
        /// `kind[:params]` or a body JSON file.
        #[arg(long, default_value = "ball")]
        body: String,
        /// Number of eigenvalues listed in the table per subspace.
        #[arg(long, default_value_t = 20)]
        count: usize,
    },
    /// Moves the body to S2-isotropic position.
    Isotropize {
        #[arg(long, default_value = "ball")]
        body: String,
    },
    /// Scans the moment gap over directions.
    Directions {
        #[arg(long, default_value = "ball")]
        body: String,
        #[arg(long, default_value_t = 512)]
        samples: usize,
    },
    /// Solves the Lp-Minkowski problem for each exponent.
    Solve {
        /// Density expression such as `1+0.3*Y20`, or a file holding one.
        #[arg(long)]
        f: Option<String>,
        /// Use `S_p` of this body as the target instead of `--f`.
        #[arg(long)]
        target: Option<String>,
        #[arg(long, default_value = "ball")]
        init: String,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        p: String,
    },
    /// Searches for a second solution with the same Lp surface measure.
    Nonunique {
        #[arg(long, default_value = "rounded_lq:6,0.15")]
        body: String,
        /// An exponent or `auto` for `n - lambda_1,e - 0.5`.
        #[arg(long, default_value = "auto", allow_hyphen_values = true)]
        p: String,
        #[arg(long, default_value_t = 8)]
        inits: usize,
        #[arg(long, default_value_t = crate::minkowski::DEFAULT_SEPARATION)]
        separation: f64,
    },
    /// Solves along exponents decreasing toward `-n`.
    Scan {
        #[arg(long, default_value = "1")]
        f: String,
        #[arg(long, default_value = "-0.5,-1,-1.5,-1.9", allow_hyphen_values = true)]
        p: String,
    },
    /// Evaluates the functional along stretched ellipsoids for `p <= -n`.
    Supercritical {
        #[arg(long, default_value = "1")]
        f: String,
        /// Exponent; defaults to `-n - 0.5`.
        #[arg(long, allow_negative_numbers = true)]
        p: Option<f64>,
        /// Stretch factors `t` of `diag(t, 1/t[, 1])`.
        #[arg(long, default_value = "2,3,4,5,6,7,8")]
        t: String,
    },
}

/// Everything that determines a run; embedded verbatim in the report.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub command: Command,
    pub dim: usize,
    pub resolution: usize,
    pub degree: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub tol_el: f64,
    pub tol_grad: f64,
    pub tol_iso: f64,
    pub max_iter: usize,
}

#[derive(Serialize)]
struct Report<'a, R: Serialize> {
    schema: &'static str,
    spec: &'a ExperimentSpec,
    result: R,
    tables: Vec<String>,
}

pub const REPORT_SCHEMA: &str = "hbm-report/1";

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID_SPEC } else { 0 };
        }
    };
    if let Ok(n) = std::env::var("HBM_THREADS") {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                // Fails only if a pool already exists, which is harmless.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: HBM_THREADS must be a positive integer, got {n:?}");
                return EXIT_INVALID_SPEC;
            }
        }
    }
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &HbmError) -> i32 {
    match e {
        HbmError::InvalidSpec(_)
        | HbmError::UnsupportedDimension(_)
        | HbmError::ResolutionTooLow(_)
        | HbmError::DegreeTooHigh { .. }
        | HbmError::DegreeTooLow(_)
        | HbmError::DimensionMismatch { .. }
        | HbmError::InvalidMeasure(_)
        | HbmError::Io(_)
        | HbmError::Json(_) => EXIT_INVALID_SPEC,
        _ => EXIT_NUMERIC_FAILURE,
    }
}

/// Builds the resolved spec for a parsed command line.
pub fn resolve_spec(cli: &Cli) -> Result<ExperimentSpec> {
    let c = &cli.common;
    if c.dim != 2 && c.dim != 3 {
        return Err(HbmError::UnsupportedDimension(c.dim));
    }
    let resolution = match (&cli.command, c.resolution) {
        (_, Some(r)) => r,
        (Command::Nonunique { .. }, None) if c.dim == 3 => NONUNIQUE_RESOLUTION_3D,
        _ => default_resolution(c.dim),
    };
    Ok(ExperimentSpec {
        command: cli.command.clone(),
        dim: c.dim,
        resolution,
        degree: c.degree.unwrap_or_else(|| default_degree(c.dim)),
        seed: c.seed,
        out: c.out.clone(),
        tol_el: c.tol_el,
        tol_grad: c.tol_grad,
        tol_iso: c.tol_iso,
        max_iter: c.max_iter,
    })
}

fn execute(cli: &Cli) -> Result<i32> {
    let spec = resolve_spec(cli)?;
    let grid = Arc::new(SphereGrid::<f64>::new(spec.dim, spec.resolution)?);
    let out = Output::new(&spec.out)?;
    match &spec.command {
        Command::Spectrum { body, count } => cmd_spectrum(&spec, &grid, &out, body, *count),
        Command::Isotropize { body } => cmd_isotropize(&spec, &grid, &out, body),
        Command::Directions { body, samples } => cmd_directions(&spec, &grid, &out, body, *samples),
        Command::Solve { f, target, init, p } => {
            cmd_solve(&spec, &grid, &out, f.as_deref(), target.as_deref(), init, p)
        }
        Command::Nonunique {
            body,
            p,
            inits,
            separation,
        } => cmd_nonunique(&spec, &grid, &out, body, p, *inits, *separation),
        Command::Scan { f, p } => cmd_scan(&spec, &grid, &out, f, p),
        Command::Supercritical { f, p, t } => cmd_supercritical(&spec, &grid, &out, f, *p, t),
    }
}

struct Output {
    dir: PathBuf,
    tables: std::cell::RefCell<Vec<String>>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir.join("tables"))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            tables: Default::default(),
        })
    }

    fn table<R: Serialize>(&self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let rel = format!("tables/{name}.csv");
        let mut w = csv::Writer::from_path(self.dir.join(&rel))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        self.tables.borrow_mut().push(rel);
        Ok(())
    }

    fn raw_table(&self, name: &str, write: impl FnOnce(fs::File) -> Result<()>) -> Result<()> {
        let rel = format!("tables/{name}.csv");
        write(fs::File::create(self.dir.join(&rel))?)?;
        self.tables.borrow_mut().push(rel);
        Ok(())
    }

    fn file(&self, name: &str, contents: &str) -> Result<()> {
        fs::write(self.dir.join(name), contents)?;
        Ok(())
    }

    fn report<R: Serialize>(&self, spec: &ExperimentSpec, result: R) -> Result<()> {
        let report = Report {
            schema: REPORT_SCHEMA,
            spec,
            result,
            tables: self.tables.borrow().clone(),
        };
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(self.dir.join("report.json"), &text)?;
        print!("{text}");
        Ok(())
    }
}

/// Parses `kind[:a,b,...]` or loads a body JSON file.
pub fn load_body(grid: &Arc<SphereGrid<f64>>, spec: &str) -> Result<Body<f64>> {
    if spec.ends_with(".json") || Path::new(spec).is_file() {
        let text = fs::read_to_string(spec)?;
        return Body::from_json(grid.clone(), &text);
    }
    let kind = parse_standard_body(spec, grid.dim())?;
    Body::standard(grid.clone(), &kind)
}

pub fn parse_standard_body(spec: &str, dim: usize) -> Result<StandardBody> {
    let (kind, params) = spec.split_once(':').unwrap_or((spec, ""));
    let nums: Vec<f64> = if params.is_empty() {
        Vec::new()
    } else {
        params
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| HbmError::InvalidSpec(format!("bad numeric parameters in body spec {spec:?}")))?
    };
    let arity = |want: &[usize]| {
        if want.contains(&nums.len()) {
            Ok(())
        } else {
            Err(HbmError::InvalidSpec(format!(
                "body {kind:?} takes {want:?} parameters, got {}",
                nums.len()
            )))
        }
    };
    match kind {
        "ball" => {
            arity(&[0, 1])?;
            Ok(StandardBody::Ball {
                radius: nums.first().copied().unwrap_or(1.0),
            })
        }
        "ellipsoid" => {
            arity(&[dim, dim * dim])?;
            let matrix = if nums.len() == dim * dim {
                nums
            } else {
                let mut m = vec![0.0; dim * dim];
                for i in 0..dim {
                    m[i * dim + i] = nums[i];
                }
                m
            };
            Ok(StandardBody::Ellipsoid { matrix })
        }
        "rounded_lq" => {
            arity(&[2])?;
            Ok(StandardBody::RoundedLq {
                q: nums[0],
                eps: nums[1],
            })
        }
        "random_even" => {
            arity(&[1, 2])?;
            if nums[0] < 0.0 || nums[0].fract() != 0.0 {
                return Err(HbmError::InvalidSpec(format!(
                    "random_even seed must be a non-negative integer, got {}",
                    nums[0]
                )));
            }
            Ok(StandardBody::RandomEven {
                seed: nums[0] as u64,
                amplitude: nums.get(1).copied().unwrap_or(0.2),
            })
        }
        other => Err(HbmError::InvalidSpec(format!("unknown body kind {other:?}"))),
    }
}

/// A density expression, or a file holding either an expression or a JSON
/// array of node values.
pub fn load_measure(grid: &Arc<SphereGrid<f64>>, f: &str) -> Result<TargetMeasure<f64>> {
    let text = if Path::new(f).is_file() {
        fs::read_to_string(f)?
    } else {
        f.to_string()
    };
    let text = text.trim();
    if text.starts_with('[') {
        let values: Vec<f64> = serde_json::from_str(text)?;
        return TargetMeasure::from_density(grid.clone(), values);
    }
    TargetMeasure::from_coeffs(grid.clone(), parse_density(grid, text)?)
}

pub fn parse_p_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| HbmError::InvalidSpec(format!("bad exponent {x:?}")))
        })
        .collect()
}

fn solve_options(spec: &ExperimentSpec) -> SolveOptions {
    SolveOptions {
        max_iter: spec.max_iter,
        grad_tol: spec.tol_grad,
        el_tol: spec.tol_el,
        ..Default::default()
    }
}

#[derive(Serialize)]
struct EigenRow {
    subspace: &'static str,
    index: usize,
    eigenvalue: f64,
    residual: f64,
}

#[derive(Serialize)]
struct SpectrumResult {
    lambda1: f64,
    multiplicity: usize,
    lambda1_cluster: Vec<f64>,
    lambda1_residual: f64,
    lambda1_even: f64,
    lambda1_even_residual: f64,
    gap_to_2n: f64,
    volume: f64,
    d_g: f64,
    trial_dimension: usize,
}

fn cmd_spectrum(
    spec: &ExperimentSpec,
    grid: &Arc<SphereGrid<f64>>,
    out: &Output,
    body: &str,
    count: usize,
) -> Result<i32> {
    let k = load_body(grid, body)?;
    let sp = Spectral::new(grid.clone(), spec.degree)?;
    let asm = sp.assemble(&k)?;
    let first = lambda1(&asm)?;
    let even = lambda1_even(&asm)?;
    for (sub, name) in [(Subspace::All, "all"), (Subspace::Even, "even")] {
        let s = spectrum(&asm, sub)?;
        let rows = s
            .eigenvalues
            .iter()
            .zip(&s.residuals)
            .take(count)
            .enumerate()
            .map(|(i, (&e, &r))| EigenRow {
                subspace: name,
                index: i,
                eigenvalue: e,
                residual: r,
            });
        out.table(&format!("eigenvalues_{name}"), rows)?;
    }
    let n = spec.dim as f64;
    out.report(
        spec,
        SpectrumResult {
            lambda1: first.value,
            multiplicity: first.multiplicity,
            lambda1_residual: first.residuals.iter().fold(0.0, |m: f64, &r| m.max(r)),
            lambda1_cluster: first.cluster,
            lambda1_even: even.value,
            lambda1_even_residual: even.residual,
            gap_to_2n: 2.0 * n - even.value,
            volume: k.volume(),
            d_g: k.geometric_distance(),
            trial_dimension: asm.trial.len(),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct IsotropizeResult {
    defect_initial: f64,
    defect: f64,
    iterations: usize,
    transform: Vec<f64>,
    d_g_before: f64,
    d_g_after: f64,
    volume: f64,
}

#[derive(Serialize)]
struct DefectRow {
    iteration: usize,
    defect: f64,
}

fn row_major(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect()
}

fn cmd_isotropize(spec: &ExperimentSpec, grid: &Arc<SphereGrid<f64>>, out: &Output, body: &str) -> Result<i32> {
    let k = load_body(grid, body)?;
    let (t, iso, rep) = isotropize(&k, spec.tol_iso, DEFAULT_MAX_ITER)?;
    out.table(
        "defect",
        rep.defect_trace.iter().enumerate().map(|(i, &d)| DefectRow {
            iteration: i,
            defect: d,
        }),
    )?;
    out.file("body.json", &iso.to_json()?)?;
    out.report(
        spec,
        IsotropizeResult {
            defect_initial: rep.defect_trace[0],
            defect: rep.defect,
            iterations: rep.iterations,
            transform: row_major(&t),
            d_g_before: k.geometric_distance(),
            d_g_after: iso.geometric_distance(),
            volume: iso.volume(),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct DirectionsResult {
    xi: [f64; 3],
    gap: f64,
    isotropic_gap: f64,
    mean_gap: f64,
    transform: Vec<f64>,
    gaussian_average: f64,
    variance: f64,
    expectation_residual: f64,
}

fn cmd_directions(
    spec: &ExperimentSpec,
    grid: &Arc<SphereGrid<f64>>,
    out: &Output,
    body: &str,
    samples: usize,
) -> Result<i32> {
    let k = load_body(grid, body)?;
    let good = find_good_direction(&k, samples)?;
    out.raw_table("gap_vs_xi", |f| good.scan.write_csv(f))?;
    let iso = k.apply_linear(&good.transform)?;
    let ident = expectation_identity(&iso)?;
    out.report(
        spec,
        DirectionsResult {
            xi: good.xi,
            gap: good.gap,
            isotropic_gap: good.isotropic_gap,
            mean_gap: good.scan.mean_gap(),
            transform: row_major(&good.transform),
            gaussian_average: ident.gaussian_average,
            variance: ident.variance,
            expectation_residual: ident.residual,
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct SolveRow {
    p: f64,
    status: SolveStatus,
    iterations: usize,
    c: f64,
    el_residual: f64,
    grad_norm: f64,
    d_g: f64,
    objective: f64,
    curvature_margin: f64,
    body_file: String,
}

#[derive(Serialize)]
struct TraceRow {
    p: f64,
    iteration: usize,
    objective: f64,
}

fn solve_row(rep: &SolveReport<f64>, body_file: String) -> SolveRow {
    SolveRow {
        p: rep.p,
        status: rep.status,
        iterations: rep.iterations,
        c: rep.c,
        el_residual: rep.el_residual,
        grad_norm: rep.grad_norm,
        d_g: rep.d_g,
        objective: *rep.objective_trace.last().unwrap_or(&f64::NAN),
        curvature_margin: rep.curvature_margin,
        body_file,
    }
}

fn cmd_solve(
    spec: &ExperimentSpec,
    grid: &Arc<SphereGrid<f64>>,
    out: &Output,
    f: Option<&str>,
    target: Option<&str>,
    init: &str,
    p: &str,
) -> Result<i32> {
    let ps = parse_p_list(p)?;
    let init = load_body(grid, init)?;
    let target_body = match (f, target) {
        (Some(_), Some(_)) => return Err(HbmError::InvalidSpec("give either --f or --target, not both".into())),
        (None, Some(t)) => Some(load_body(grid, t)?),
        _ => None,
    };
    let opts = solve_options(spec);
    let mut rows = Vec::new();
    let mut trace = Vec::new();
    let mut all_converged = true;
    for (i, &p) in ps.iter().enumerate() {
        let mu = match &target_body {
            Some(k) => TargetMeasure::from_body(k, p)?,
            None => load_measure(grid, f.unwrap_or("1"))?,
        };
        let rep = run(&mu, p, &init, &opts)?;
        all_converged &= rep.converged();
        let name = format!("body_{i}.json");
        out.file(&name, &rep.body.to_json()?)?;
        trace.extend(rep.objective_trace.iter().enumerate().map(|(it, &o)| TraceRow {
            p,
            iteration: it,
            objective: o,
        }));
        rows.push(solve_row(&rep, name));
    }
    out.table("objective", trace)?;
    out.report(spec, &rows)?;
    Ok(if all_converged { 0 } else { EXIT_NUMERIC_FAILURE })
}

#[derive(Serialize)]
struct NonuniqueResult {
    p: f64,
    lambda1_even: f64,
    threshold: f64,
    k1_objective: f64,
    found: bool,
    found_trial: Option<usize>,
    separation: Option<f64>,
    el_residual: Option<f64>,
    message: Option<String>,
}

fn cmd_nonunique(
    spec: &ExperimentSpec,
    grid: &Arc<SphereGrid<f64>>,
    out: &Output,
    body: &str,
    p: &str,
    inits: usize,
    separation: f64,
) -> Result<i32> {
    let k1 = load_body(grid, body)?;
    let sp = Spectral::new(grid.clone(), spec.degree)?;
    let p = if p == "auto" {
        spec.dim as f64 - sp.lambda1_even(&k1)?.value - 0.5
    } else {
        parse_p_list(p)?
            .first()
            .copied()
            .ok_or_else(|| HbmError::InvalidSpec("empty exponent".into()))?
    };
    let exp = NonuniqueOptions {
        n_init: inits,
        seed: spec.seed,
        separation,
        stop_at_first: false,
    };
    let rep = nonuniqueness_experiment(&k1, p, &sp, &solve_options(spec), &exp)?;
    out.table("trials", rep.trials.iter())?;
    let (found_trial, sep, el) = match &rep.found {
        Some((i, body)) => {
            out.file("k2.json", &body.to_json()?)?;
            let mu = TargetMeasure::from_body(&k1, p)?;
            (
                Some(*i),
                Some(rep.trials[*i].separation),
                Some(el_residual(body, &mu, p).0),
            )
        }
        None => (None, None, None),
    };
    out.report(
        spec,
        NonuniqueResult {
            p,
            lambda1_even: rep.lambda1_even,
            threshold: 1.0 + separation,
            k1_objective: rep.k1_objective,
            found: rep.found.is_some(),
            found_trial,
            separation: sep,
            el_residual: el,
            message: rep.distinct().err().map(|e| e.to_string()),
        },
    )?;
    Ok(0)
}

#[derive(Serialize)]
struct ScanTableRow {
    p: f64,
    #[serde(rename = "dG")]
    d_g: f64,
    residual: f64,
    lambda_even: f64,
    objective: f64,
}

#[derive(Serialize)]
struct ScanResult {
    rows: Vec<crate::minkowski::ScanRow>,
    d_g_increasing: bool,
}

fn cmd_scan(spec: &ExperimentSpec, grid: &Arc<SphereGrid<f64>>, out: &Output, f: &str, p: &str) -> Result<i32> {
    let mu = load_measure(grid, f)?;
    let ps = parse_p_list(p)?;
    let init = Body::standard(grid.clone(), &StandardBody::Ball { radius: 1.0 })?;
    let sp = Spectral::new(grid.clone(), spec.degree)?;
    let rows = critical_divergence_scan(&mu, &ps, &init, &sp, &solve_options(spec))?;
    out.table(
        "dg_vs_p",
        rows.iter().map(|r| ScanTableRow {
            p: r.p,
            d_g: r.d_g,
            residual: r.el_residual,
            lambda_even: r.lambda_even,
            objective: r.objective,
        }),
    )?;
    let d_g_increasing = rows.windows(2).all(|w| w[1].d_g > w[0].d_g);
    out.report(spec, ScanResult { rows, d_g_increasing })?;
    Ok(0)
}

#[derive(Serialize)]
struct SupercriticalTableRow {
    t: f64,
    #[serde(rename = "dG")]
    d_g: f64,
    functional: f64,
    neg_functional: f64,
    mahler: f64,
}

fn cmd_supercritical(
    spec: &ExperimentSpec,
    grid: &Arc<SphereGrid<f64>>,
    out: &Output,
    f: &str,
    p: Option<f64>,
    t: &str,
) -> Result<i32> {
    let mu = load_measure(grid, f)?;
    let p = p.unwrap_or(-(spec.dim as f64) - 0.5);
    let ts = parse_p_list(t)?;
    let ball = Body::standard(grid.clone(), &StandardBody::Ball { radius: 1.0 })?;
    let unit = ball.scaled(ball.volume().powf(-1.0 / spec.dim as f64))?;
    let path: Vec<_> = ts.iter().map(|&t| LinearImage::stretch(unit.clone(), t)).collect();
    let rep = supercritical_diagnostic(&mu, p, &path)?;
    out.table(
        "supercritical",
        rep.rows.iter().zip(&ts).map(|(r, &t)| SupercriticalTableRow {
            t,
            d_g: r.d_g,
            functional: r.functional,
            neg_functional: r.neg_functional,
            mahler: r.mahler,
        }),
    )?;
    out.report(spec, &rep)?;
    Ok(0)
}
