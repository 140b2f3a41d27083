//! Half-line Schrödinger operators with local potentials: Volterra
//! solutions, the Jost function, Weyl–Titchmarsh m-functions, free Green
//! kernels and Nyström Birman–Schwinger determinants.

mod green;
mod nystrom;
mod potential;
mod solutions;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::NumericsError;

pub use green::{halfline_green, m_functions, MFunctions};
pub use nystrom::{bs_determinant_halfline, bs_matrix_halfline, ratio_identity_check, RatioCheck};
pub use potential::{LocalPotential, Profile, Side, NEGLIGIBLE};
pub use solutions::{jost_cutoff, jost_solution, regular_solutions, wronskian, SolutionSample};

/// Boundary condition at `x = 0` (or on the boundary of a domain).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    pub fn label(&self) -> &'static str {
        match self {
            BoundaryCondition::Dirichlet => "dirichlet",
            BoundaryCondition::Neumann => "neumann",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum HalflineError {
    #[error("spectral point z = 0 is not allowed")]
    ZeroSpectralPoint,
    #[error("spectral point {0} lies on the cut [0, inf)")]
    OnCut(Complex64),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("x = {0} is not a node of the sample grid")]
    NotOnGrid(f64),
    #[error("z = {z} is (numerically) a Dirichlet eigenvalue: |f(z,0)| = {modulus:.3e}")]
    DirichletEigenvalue { z: Complex64, modulus: f64 },
    #[error("z = {z} is (numerically) a Neumann eigenvalue: |f'(z,0)| = {modulus:.3e}")]
    NeumannEigenvalue { z: Complex64, modulus: f64 },
    #[error("potential is not negligible at the truncation point {length}: |V| = {value:.3e}")]
    Truncation { length: f64, value: f64 },
    #[error("at least {min} nodes required, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
