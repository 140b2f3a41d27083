//! Regular and boundary-matched radial solutions and the free modal
//! Dirichlet-to-Neumann / Neumann-to-Dirichlet eigenvalues.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::shooting::{shoot_matched, shoot_mode};
use super::{GeometryError, ModalDomain, EIGENVALUE_THRESHOLD};
use crate::halfline::BoundaryCondition;

/// Radial factors of the free resolvent in one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialSolutionPair {
    pub mode: i32,
    pub bc: BoundaryCondition,
    pub radii: Vec<f64>,
    /// `p(r) ~ r^nu` as `r -> 0`, and `p'(r)`.
    pub regular: Vec<Complex64>,
    pub regular_derivative: Vec<Complex64>,
    /// `q` with `q(1) = 0, q'(1) = 1` (Dirichlet) or `q(1) = 1, q'(1) = 0`
    /// (Neumann), and `q'(r)`.
    pub matched: Vec<Complex64>,
    pub matched_derivative: Vec<Complex64>,
    /// `c = r^{d-1} W(p, q)`, independent of `r`; the mode kernel is
    /// `g(r, r') = -p(r_<) q(r_>) / c`.
    pub wronskian_norm: Complex64,
    pub(crate) order: f64,
    // p / r^nu and q r^nu, well scaled for every mode
    pub(crate) regular_scaled: Vec<Complex64>,
    pub(crate) matched_scaled: Vec<Complex64>,
}

impl RadialSolutionPair {
    /// `g(radii[a], radii[b])`.
    pub fn kernel(&self, a: usize, b: usize) -> Complex64 {
        let (lo, hi) = if self.radii[a] <= self.radii[b] {
            (a, b)
        } else {
            (b, a)
        };
        let ratio = (self.radii[lo] / self.radii[hi]).powf(self.order);
        -self.regular_scaled[lo] * self.matched_scaled[hi] * ratio / self.wronskian_norm
    }
}

/// Boundary values `(p(1), p'(1))` of the regular solution.
pub(crate) fn regular_boundary_values(
    domain: &ModalDomain,
    mode: i32,
    z: Complex64,
) -> Result<(Complex64, Complex64), GeometryError> {
    let shot = shoot_mode(domain, mode, z, &[], &[], &[])?;
    Ok((shot.p1, shot.dp1))
}

pub(crate) fn matched_boundary_data(bc: BoundaryCondition) -> (Complex64, Complex64) {
    let (one, zero) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    match bc {
        BoundaryCondition::Dirichlet => (zero, one),
        BoundaryCondition::Neumann => (one, zero),
    }
}

/// `c = p(1) q'(1) - p'(1) q(1)`, refused when below the eigenvalue threshold.
pub(crate) fn wronskian_norm(
    mode: i32,
    bc: BoundaryCondition,
    z: Complex64,
    p1: Complex64,
    dp1: Complex64,
) -> Result<Complex64, GeometryError> {
    let (q1, dq1) = matched_boundary_data(bc);
    let c = p1 * dq1 - dp1 * q1;
    if c.norm() < EIGENVALUE_THRESHOLD {
        return Err(GeometryError::EigenvalueProximity {
            z,
            mode,
            bc,
            modulus: c.norm(),
        });
    }
    Ok(c)
}

/// Radial solution pair sampled on the domain's radial grid.
pub fn radial_solutions(
    domain: &ModalDomain,
    mode: i32,
    bc: BoundaryCondition,
    z: Complex64,
) -> Result<RadialSolutionPair, GeometryError> {
    radial_solutions_at(domain, mode, bc, z, &domain.radii())
}

/// Radial solution pair sampled on arbitrary radii in `(0, 1]`.
pub fn radial_solutions_at(
    domain: &ModalDomain,
    mode: i32,
    bc: BoundaryCondition,
    z: Complex64,
    radii: &[f64],
) -> Result<RadialSolutionPair, GeometryError> {
    let shot = shoot_mode(domain, mode, z, &[], &[], radii)?;
    let c = wronskian_norm(mode, bc, z, shot.p1, shot.dp1)?;
    let boundary = matched_boundary_data(bc);
    let matched = shoot_matched(domain, mode, z, boundary, radii)?;
    let nu = shot.nu;
    let mut pair = RadialSolutionPair {
        mode,
        bc,
        radii: radii.to_vec(),
        regular: shot.p.clone(),
        regular_derivative: shot.dp.clone(),
        matched: Vec::with_capacity(radii.len()),
        matched_derivative: Vec::with_capacity(radii.len()),
        wronskian_norm: c,
        order: nu,
        regular_scaled: Vec::with_capacity(radii.len()),
        matched_scaled: Vec::with_capacity(radii.len()),
    };
    for (i, &r) in radii.iter().enumerate() {
        let rn = r.powf(nu);
        let (s, ds) = matched[i];
        pair.matched.push(s / rn);
        pair.matched_derivative.push((ds - s * nu) / (rn * r));
        pair.matched_scaled.push(s);
        pair.regular_scaled.push(shot.p[i] / rn);
    }
    Ok(pair)
}

/// Eigenvalue of the free Dirichlet-to-Neumann map `f -> -d_r u(1)` on
/// `e^{i n theta}`: `-p'(1) / p(1)`.
pub fn free_dtn_mode(
    domain: &ModalDomain,
    mode: i32,
    z: Complex64,
) -> Result<Complex64, GeometryError> {
    let (p1, dp1) = regular_boundary_values(domain, mode, z)?;
    wronskian_norm(mode, BoundaryCondition::Dirichlet, z, p1, dp1)?;
    Ok(-dp1 / p1)
}

/// Eigenvalue of the free Neumann-to-Dirichlet map `g -> u(1)` where
/// `d_r u(1) = g`: `p(1) / p'(1)`.
pub fn free_ntd_mode(
    domain: &ModalDomain,
    mode: i32,
    z: Complex64,
) -> Result<Complex64, GeometryError> {
    let (p1, dp1) = regular_boundary_values(domain, mode, z)?;
    wronskian_norm(mode, BoundaryCondition::Neumann, z, p1, dp1)?;
    Ok(p1 / dp1)
}
