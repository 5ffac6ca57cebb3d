use thiserror::Error;

#[derive(Debug, Error)]
pub enum HbmError {
    #[error("unsupported dimension {0}; only n = 2 and n = 3 are implemented")]
    UnsupportedDimension(usize),
    #[error("grid resolution {0} is below the minimum of 4")]
    ResolutionTooLow(usize),
    #[error("harmonic degree {requested} exceeds what the grid integrates exactly (max {max})")]
    DegreeTooHigh { requested: usize, max: usize },
    #[error("harmonic degree must be at least 2, got {0}")]
    DegreeTooLow(usize),
    #[error("body violates the convexity floor: min eigenvalue of D^2 h is {min_eig:.3e} (floor {floor:.3e})")]
    ConvexityFailure { min_eig: f64, floor: f64 },
    #[error("support function is not positive (min h = {0:.3e})")]
    NonPositiveSupport(f64),
    #[error("inradius condition violated: min h = {min_h:.6e} < 1/R = {inv_r:.6e}")]
    InradiusViolation { min_h: f64, inv_r: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("metric g_K is singular at node {0}")]
    SingularMetric(usize),
    #[error("test function has (numerically) zero variance")]
    DegenerateTestFunction,
    #[error("h_L / h_K is (numerically) constant")]
    DegenerateTestBody,
    #[error("zero vector passed where a direction is required")]
    ZeroVector,
    #[error("no convergence after {iterations} iterations (last defect {last:.3e})")]
    NoConvergence { iterations: usize, last: f64 },
    #[error("body is not in S2-isotropic position (defect {0:.3e})")]
    NotIsotropic(f64),
    #[error(
        "solver did not converge after {iterations} iterations (gradient {grad_norm:.3e}, residual {residual:.3e})"
    )]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        residual: f64,
    },
    #[error("no feasible step above the curvature floor")]
    ConvexityBarrier,
    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),
    #[error("no separated solution found: {0}")]
    SeparationNotFound(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = HbmError> = std::result::Result<T, E>;
