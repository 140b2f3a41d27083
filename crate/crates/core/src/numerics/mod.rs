//! Complex-arithmetic foundation shared by every other module.

pub mod bessel;
pub mod complex;
pub mod linalg;
pub mod ode;
pub mod quadrature;

use thiserror::Error;

pub use bessel::{bessel_j, bessel_j_derivative};
pub use complex::{principal_sqrt, SpectralPoint};
pub use linalg::{
    det, det_i_plus, solve_i_plus, solve_i_plus_with_limit, Determinant, Lu, OperatorMatrix,
    Weighting,
};
pub use quadrature::{
    circle_rule, composite_gauss, disk_rule, gauss_interval, radial_ball_rule, GridGeometry, Node,
    QuadratureGrid,
};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    #[error("invalid quadrature rule: {0}")]
    InvalidRule(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrix is singular (exact zero pivot)")]
    Singular,
    #[error("matrix is near-singular (condition estimate {condition:.3e})")]
    NearSingular { condition: f64 },
    #[error("argument outside validated envelope: {0}")]
    OutsideEnvelope(String),
    #[error("ode integration failed: {0}")]
    Ode(String),
}
