//! Nyström discretization of the half-line Birman–Schwinger operator
//! `u (H_0 - z)^{-1} v` and the ratio identity chain.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::green::{green_unchecked, m_functions, EIGENVALUE_THRESHOLD};
use super::potential::{LocalPotential, Side};
use super::{BoundaryCondition, HalflineError};
use crate::numerics::{composite_gauss, det_i_plus, OperatorMatrix, SpectralPoint};

pub const MIN_NODES: usize = 16;
/// Gauss panel order. The kernel has a derivative jump on the diagonal, so
/// low-order panels converge just as fast as one global rule would and cost
/// nothing extra.
pub const PANEL_ORDER: usize = 8;
const TRUNCATION_LIMIT: f64 = 1e-12;

/// Weight-symmetrized Nyström matrix of `u (H_0^{bc} - z)^{-1} v` with
/// `u = exp(i arg V) |V|^{1/2}`, `v = |V|^{1/2}`.
///
/// The `n` nodes form a composite Gauss rule on `[0, min(L, L_V)]` with panel
/// boundaries at the jumps of `V`. Rows and columns for nodes where `V`
/// vanishes are identically zero, so dropping them leaves the determinant
/// unchanged.
pub fn bs_matrix_halfline(
    bc: BoundaryCondition,
    v: &LocalPotential,
    z: SpectralPoint,
    length: f64,
    n: usize,
) -> Result<OperatorMatrix, HalflineError> {
    if z.on_cut() {
        return Err(HalflineError::OnCut(z.z()));
    }
    if n < MIN_NODES {
        return Err(HalflineError::TooFewNodes {
            min: MIN_NODES,
            got: n,
        });
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(HalflineError::InvalidGrid(format!(
            "truncation length {length}"
        )));
    }
    let tail = v.limit(length, Side::Right).norm();
    if tail > TRUNCATION_LIMIT {
        return Err(HalflineError::Truncation {
            length,
            value: tail,
        });
    }
    let end = length.min(v.support_bound());
    let grid = Arc::new(composite_gauss(n, 0.0, end, v.breakpoints(), PANEL_ORDER)?);
    let factors: Vec<(Complex64, f64)> = grid.abscissae().iter().map(|&x| v.factors(x)).collect();
    let xs = grid.abscissae();
    let k = z.root();
    Ok(OperatorMatrix::nystrom(grid.clone(), grid, |i, j| {
        let (u, _) = factors[i];
        let (_, w) = factors[j];
        if w == 0.0 || u == Complex64::new(0.0, 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        u * green_unchecked(bc, k, xs[i], xs[j]) * w
    }))
}

/// `det(I + u (H_0^{bc} - z)^{-1} v)` by Nyström discretization.
pub fn bs_determinant_halfline(
    bc: BoundaryCondition,
    v: &LocalPotential,
    z: SpectralPoint,
    length: f64,
    n: usize,
) -> Result<Complex64, HalflineError> {
    if v.is_zero() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let m = bs_matrix_halfline(bc, v, z, length, n)?;
    Ok(det_i_plus(&m)?.value)
}

/// The four expressions for the ratio of Neumann to Dirichlet perturbation
/// determinants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioCheck {
    pub det_dirichlet: Complex64,
    pub det_neumann: Complex64,
    /// `det_N / det_D`
    pub determinant_ratio: Complex64,
    /// `f'(z,0) / (i k f(z,0))`
    pub jost_ratio: Complex64,
    /// `m_D / m0_D`
    pub dirichlet_m_ratio: Complex64,
    /// `m0_N / m_N`
    pub neumann_m_ratio: Complex64,
    pub max_residual: f64,
}

impl RatioCheck {
    pub fn values(&self) -> [Complex64; 4] {
        [
            self.determinant_ratio,
            self.jost_ratio,
            self.dirichlet_m_ratio,
            self.neumann_m_ratio,
        ]
    }
}

pub fn ratio_identity_check(
    v: &LocalPotential,
    z: SpectralPoint,
    length: f64,
    n: usize,
) -> Result<RatioCheck, HalflineError> {
    let m = m_functions(v, z)?;
    let det_dirichlet = bs_determinant_halfline(BoundaryCondition::Dirichlet, v, z, length, n)?;
    let det_neumann = bs_determinant_halfline(BoundaryCondition::Neumann, v, z, length, n)?;
    if det_dirichlet.norm() < EIGENVALUE_THRESHOLD {
        return Err(HalflineError::DirichletEigenvalue {
            z: z.z(),
            modulus: det_dirichlet.norm(),
        });
    }
    let k = z.root();
    let mut check = RatioCheck {
        det_dirichlet,
        det_neumann,
        determinant_ratio: det_neumann / det_dirichlet,
        jost_ratio: m.jost_derivative / (Complex64::i() * k * m.jost_value),
        dirichlet_m_ratio: m.dirichlet / m.free_dirichlet,
        neumann_m_ratio: m.free_neumann / m.neumann,
        max_residual: 0.0,
    };
    let vals = check.values();
    for a in 0..4 {
        for b in a + 1..4 {
            check.max_residual = check.max_residual.max((vals[a] - vals[b]).norm());
        }
    }
    Ok(check)
}
