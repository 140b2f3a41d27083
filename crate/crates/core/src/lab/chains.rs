//! The two determinant chains relating interior Birman–Schwinger
//! determinants, boundary determinants and Dirichlet-to-Neumann /
//! Neumann-to-Dirichlet ratios.

use num_complex::Complex64;

use super::boundary::{dtn_perturbed, neumann_boundary_operator, ntd_perturbed};
use super::{
    dirichlet_boundary_operator, IdentityReport, LabError, ModalReduction, NamedValue, Refinement,
};
use crate::geometry::ModalDomain;
use crate::halfline::BoundaryCondition;
use crate::numerics::{det, det_i_plus, OperatorMatrix};
use crate::potential::FiniteRankPotential;

fn named(name: &str, value: Complex64) -> NamedValue {
    NamedValue {
        name: name.to_string(),
        value,
    }
}

fn flag_or(
    z: Complex64,
    domain: &ModalDomain,
    result: Result<Vec<NamedValue>, LabError>,
) -> Result<IdentityReport, LabError> {
    let refinement = Refinement::of(domain);
    match result {
        Ok(q) => Ok(IdentityReport::from_quantities(z, q, refinement)),
        Err(e) if e.is_eigenvalue_flag() => {
            Ok(IdentityReport::flagged(z, refinement, e.to_string()))
        }
        Err(e) => Err(e),
    }
}

/// Dirichlet-side chain:
/// `det(I + u G_0^N v) / det(I + u G_0^D v)` (`lhs_ratio`),
/// `det(I - gamma_N (H^D - z)^{-1} V [gamma_D (H_0^N - conj z)^{-1}]^*)`
/// (`boundary_det`) and `det(M^D(z) M_0^D(z)^{-1})` (`dtn_det`).
pub fn verify_dirichlet_chain(
    domain: &ModalDomain,
    v: &FiniteRankPotential,
    z: Complex64,
) -> Result<IdentityReport, LabError> {
    let quantities = (|| {
        let reduction = ModalReduction::new(domain, v, z, &[])?;
        let dn = reduction.bs_det(BoundaryCondition::Neumann)?;
        let dd = reduction.bs_det(BoundaryCondition::Dirichlet)?;
        let boundary = dirichlet_boundary_operator(domain, v, z)?.det_identity_minus()?;
        let dtn = dtn_perturbed(domain, v, z)?.ratio.modal_det()?;
        Ok(vec![
            named("lhs_ratio", dn / dd),
            named("boundary_det", boundary),
            named("dtn_det", dtn),
        ])
    })();
    flag_or(z, domain, quantities)
}

/// Neumann-side (reciprocal) chain:
/// `det(I + u G_0^D v) / det(I + u G_0^N v)` (`lhs_ratio`),
/// `det(I + gamma_N (H_0^D - z)^{-1} V [gamma_D ((H^N - z)^{-1})^*]^*)`
/// (`boundary_det`) and `det(M_0^N(z)^{-1} M^N(z))` (`neumann_variant_det`).
pub fn verify_neumann_chain(
    domain: &ModalDomain,
    v: &FiniteRankPotential,
    z: Complex64,
) -> Result<IdentityReport, LabError> {
    let quantities = (|| {
        let reduction = ModalReduction::new(domain, v, z, &[])?;
        let dn = reduction.bs_det(BoundaryCondition::Neumann)?;
        let dd = reduction.bs_det(BoundaryCondition::Dirichlet)?;
        let boundary = det_i_plus(&neumann_boundary_operator(domain, v, z)?.matrix)?.value;
        let (ntd, free) = ntd_perturbed(domain, v, z)?;
        let inv = OperatorMatrix::diagonal(&free.iter().map(|l| l.inv()).collect::<Vec<_>>());
        let ntd_det = det(&inv.matmul(&ntd)?)?.value;
        Ok(vec![
            named("lhs_ratio", dd / dn),
            named("boundary_det", boundary),
            named("neumann_variant_det", ntd_det),
        ])
    })();
    flag_or(z, domain, quantities)
}
