//! Determinant identities for finite-rank nonlocal potentials on the disk and
//! the ball: interior Birman–Schwinger determinants, perturbed resolvents and
//! Dirichlet-to-Neumann maps, boundary operators, the two determinant chains
//! and the determinant-swap property.

mod boundary;
mod chains;
mod nystrom;
mod reduction;
mod swap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, ModalDomain, ModalField, ModalFunction};
use crate::halfline::BoundaryCondition;
use crate::numerics::NumericsError;
use crate::potential::{FiniteRankPotential, PotentialError};

pub use boundary::{
    dirichlet_boundary_operator, dtn_perturbed, AssemblyRoute, BoundaryOperator, DtnPair,
};
pub use chains::{verify_dirichlet_chain, verify_neumann_chain};
pub use nystrom::{nystrom_bs_det, nystrom_full_grid_det, NystromRule};
pub use reduction::{ModalReduction, PERTURBED_EIGENVALUE_THRESHOLD};
pub use swap::{det_swap_pair, det_swap_property, SwapConfig, SwapStatistics};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LabError {
    #[error("potential and domain are of different kinds")]
    DomainMismatch,
    #[error("z = {z} is within {modulus:.3e} of an eigenvalue of the perturbed {bc:?} operator")]
    PerturbedEigenvalue {
        z: Complex64,
        bc: BoundaryCondition,
        modulus: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl LabError {
    /// Whether the error marks proximity to a free or perturbed eigenvalue.
    pub fn is_eigenvalue_flag(&self) -> bool {
        matches!(
            self,
            LabError::PerturbedEigenvalue { .. }
                | LabError::Geometry(GeometryError::EigenvalueProximity { .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedResidual {
    pub name: String,
    pub value: f64,
}

/// Grid and mode parameters a report was computed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub n_radial: usize,
    pub mode_cutoff: usize,
    pub n_boundary: usize,
}

impl Refinement {
    pub fn of(domain: &ModalDomain) -> Self {
        Self {
            n_radial: domain.radial_grid().len(),
            mode_cutoff: domain.mode_cutoff(),
            n_boundary: domain.boundary_grid().len(),
        }
    }
}

/// Values of one determinant chain at one `z`, with pairwise residuals
/// `|a - b| / max(|a|, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub z: Complex64,
    pub quantities: Vec<NamedValue>,
    pub residuals: Vec<NamedResidual>,
    pub refinement: Refinement,
    pub flags: Vec<String>,
}

pub fn relative_residual(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(1.0)
}

impl IdentityReport {
    /// Report with every pairwise residual of `quantities`.
    pub fn from_quantities(
        z: Complex64,
        quantities: Vec<NamedValue>,
        refinement: Refinement,
    ) -> Self {
        let mut residuals = Vec::new();
        for i in 0..quantities.len() {
            for j in i + 1..quantities.len() {
                residuals.push(NamedResidual {
                    name: format!("{}~{}", quantities[i].name, quantities[j].name),
                    value: relative_residual(quantities[i].value, quantities[j].value),
                });
            }
        }
        Self {
            z,
            quantities,
            residuals,
            refinement,
            flags: Vec::new(),
        }
    }

    /// Report for a `z` excluded by an eigenvalue flag.
    pub fn flagged(z: Complex64, refinement: Refinement, flag: String) -> Self {
        Self {
            z,
            quantities: Vec::new(),
            residuals: Vec::new(),
            refinement,
            flags: vec![flag],
        }
    }

    pub fn is_excluded(&self) -> bool {
        !self.flags.is_empty()
    }

    pub fn quantity(&self, name: &str) -> Option<Complex64> {
        self.quantities
            .iter()
            .find(|q| q.name == name)
            .map(|q| q.value)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.value))
    }
}

/// `det(I + u G_0^{bc}(z) v)` in the `r x r` reduction.
pub fn bs_det_interior(
    domain: &ModalDomain,
    bc: BoundaryCondition,
    v: &FiniteRankPotential,
    z: Complex64,
) -> Result<Complex64, LabError> {
    ModalReduction::new(domain, v, z, &[])?.bs_det(bc)
}

/// `(H^{bc} - z)^{-1} f` on the domain radii.
pub fn perturbed_resolvent_apply(
    domain: &ModalDomain,
    bc: BoundaryCondition,
    v: &FiniteRankPotential,
    z: Complex64,
    f: &ModalFunction,
) -> Result<ModalField, LabError> {
    let reduction = ModalReduction::with_sources(domain, v, z, &domain.radii(), &[f])?;
    Ok(reduction.perturbed_resolvent(bc, v.rank())?.field)
}
