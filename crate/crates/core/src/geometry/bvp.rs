//! Helmholtz and Schrödinger boundary value problems with modal data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::modal::ModalField;
use super::radial::wronskian_norm;
use super::shooting::shoot_mode;
use super::{GeometryError, ModalDomain};
use crate::halfline::BoundaryCondition;
use crate::lab::{LabError, ModalReduction};
use crate::potential::FiniteRankPotential;

/// Boundary data `sum_n c_n e^{i n theta}` as `(n, c_n)` pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoundaryData {
    pub coefficients: Vec<(i32, Complex64)>,
}

impl BoundaryData {
    pub fn mode(n: i32, c: Complex64) -> Self {
        Self {
            coefficients: vec![(n, c)],
        }
    }

    /// Coefficient vector aligned with [`ModalDomain::modes`].
    pub fn to_vector(&self, domain: &ModalDomain) -> Result<Vec<Complex64>, GeometryError> {
        let mut v = vec![Complex64::new(0.0, 0.0); domain.mode_count()];
        for &(n, c) in &self.coefficients {
            v[domain.mode_index(n)?] += c;
        }
        Ok(v)
    }
}

/// A solution sampled per mode, with its boundary traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionField {
    pub field: ModalField,
    /// `gamma_D u` per domain mode.
    pub boundary_values: Vec<Complex64>,
    /// Outward normal derivative `d_r u(1)` per domain mode.
    pub boundary_derivatives: Vec<Complex64>,
}

/// Solves `(-Delta - z) u = 0` with `u = f` (Dirichlet) or `d_r u = g`
/// (Neumann) on the boundary, sampled at `radii`.
pub fn solve_helmholtz_bvp(
    domain: &ModalDomain,
    bc: BoundaryCondition,
    data: &BoundaryData,
    z: Complex64,
    radii: &[f64],
) -> Result<SolutionField, GeometryError> {
    let coeffs = data.to_vector(domain)?;
    let modes = domain.modes();
    let mut field = ModalField::zeros(modes.clone(), radii.to_vec());
    let mut boundary_values = vec![Complex64::new(0.0, 0.0); modes.len()];
    let mut boundary_derivatives = boundary_values.clone();
    for (m, &n) in modes.iter().enumerate() {
        if coeffs[m] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let shot = shoot_mode(domain, n, z, &[], &[], radii)?;
        wronskian_norm(n, bc, z, shot.p1, shot.dp1)?;
        let scale = match bc {
            BoundaryCondition::Dirichlet => coeffs[m] / shot.p1,
            BoundaryCondition::Neumann => coeffs[m] / shot.dp1,
        };
        for (a, p) in shot.p.iter().enumerate() {
            field.values[m][a] = p * scale;
        }
        boundary_values[m] = shot.p1 * scale;
        boundary_derivatives[m] = shot.dp1 * scale;
    }
    Ok(SolutionField {
        field,
        boundary_values,
        boundary_derivatives,
    })
}

/// Solves `(-Delta + V - z) u = 0` with Dirichlet or Neumann data as
/// `u = u_0 - (H^{bc} - z)^{-1} V u_0`, the perturbed resolvent applied in its
/// finite-rank reduction.
pub fn solve_schrodinger_bvp(
    domain: &ModalDomain,
    bc: BoundaryCondition,
    v: &FiniteRankPotential,
    data: &BoundaryData,
    z: Complex64,
    radii: &[f64],
) -> Result<SolutionField, LabError> {
    let reduction = ModalReduction::new(domain, v, z, radii)?;
    reduction.solve_bvp(bc, &data.to_vector(domain)?)
}
