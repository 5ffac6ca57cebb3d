// Negated comparisons are deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod affine;
pub mod body;
pub mod cli;
pub mod directions;
pub mod error;
pub mod linalg;
pub mod minkowski;
pub mod mixed_vol;
pub mod scalar;
pub mod spectral;
pub mod sphere;

pub use error::{HbmError, Result};
pub use scalar::Real;

/// Double-precision aliases for the generic types.
pub type SphereGrid = sphere::SphereGrid<f64>;
pub type Body = body::Body<f64>;
pub type Field = sphere::Field<f64>;
pub type Jet = sphere::Jet<f64>;
pub type Spectral = spectral::Spectral<f64>;
pub type OperatorAssembly = spectral::OperatorAssembly<f64>;
pub type TargetMeasure = minkowski::TargetMeasure<f64>;
pub type SolveReport = minkowski::SolveReport<f64>;
pub type IsotropyReport = affine::IsotropyReport<f64>;
pub type MomentForms = directions::MomentForms<f64>;
