//! Free half-line Green kernels and Weyl–Titchmarsh m-functions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::potential::LocalPotential;
use super::solutions::jost_solution;
use super::{BoundaryCondition, HalflineError};
use crate::numerics::SpectralPoint;

/// Denominator magnitude below which `z` is treated as an eigenvalue.
pub const EIGENVALUE_THRESHOLD: f64 = 1e-13;

/// Kernel of `(H_0 - z)^{-1}` on `(0, inf)` with the given boundary
/// condition at the origin, `k = z^{1/2}`:
///
/// * Dirichlet: `sin(k x_<) exp(i k x_>) / k`
/// * Neumann: `i cos(k x_<) exp(i k x_>) / k`
pub fn halfline_green(
    bc: BoundaryCondition,
    z: SpectralPoint,
    x: f64,
    x_prime: f64,
) -> Result<Complex64, HalflineError> {
    if z.on_cut() {
        return Err(HalflineError::OnCut(z.z()));
    }
    Ok(green_unchecked(bc, z.root(), x, x_prime))
}

#[inline]
pub(crate) fn green_unchecked(
    bc: BoundaryCondition,
    k: Complex64,
    x: f64,
    x_prime: f64,
) -> Complex64 {
    let (lo, hi) = if x <= x_prime {
        (x, x_prime)
    } else {
        (x_prime, x)
    };
    let outgoing = (Complex64::i() * k * hi).exp();
    match bc {
        BoundaryCondition::Dirichlet => (k * lo).sin() * outgoing / k,
        BoundaryCondition::Neumann => Complex64::i() * (k * lo).cos() * outgoing / k,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MFunctions {
    pub free_dirichlet: Complex64,
    pub free_neumann: Complex64,
    pub dirichlet: Complex64,
    pub neumann: Complex64,
    /// `f(z, 0)` and `f'(z, 0)` the perturbed values were built from.
    pub jost_value: Complex64,
    pub jost_derivative: Complex64,
}

/// `m0_D = i k`, `m0_N = i / k`, `m_D = f'(z,0) / f(z,0)`,
/// `m_N = -f(z,0) / f'(z,0)`.
pub fn m_functions(v: &LocalPotential, z: SpectralPoint) -> Result<MFunctions, HalflineError> {
    let f = jost_solution(v, z, &[0.0])?;
    let (f0, d0) = (f.values[0], f.derivatives[0]);
    if f0.norm() < EIGENVALUE_THRESHOLD {
        return Err(HalflineError::DirichletEigenvalue {
            z: z.z(),
            modulus: f0.norm(),
        });
    }
    if d0.norm() < EIGENVALUE_THRESHOLD {
        return Err(HalflineError::NeumannEigenvalue {
            z: z.z(),
            modulus: d0.norm(),
        });
    }
    let k = z.root();
    Ok(MFunctions {
        free_dirichlet: Complex64::i() * k,
        free_neumann: Complex64::i() / k,
        dirichlet: d0 / f0,
        neumann: -f0 / d0,
        jost_value: f0,
        jost_derivative: d0,
    })
}
