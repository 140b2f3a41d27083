//! The unit disk and the radial section of the unit ball: modal Green's
//! functions of the free Dirichlet and Neumann Laplacians, boundary trace
//! kernels, free Dirichlet-to-Neumann / Neumann-to-Dirichlet maps and
//! boundary value problems.
//!
//! Functions are expanded as `f(r, theta) = sum_n f_n(r) e^{i n theta}` on the
//! disk (`|n| <= mode_cutoff`) and as radial functions `f(r)` on the ball.
//! With `ang = 2 pi` (disk) or `4 pi` (ball) the interior and boundary inner
//! products become `ang sum_n int conj(f_n) g_n r^{d-1} dr` and
//! `ang sum_n conj(a_n) b_n`, and the free resolvent acts on each mode by the
//! radial kernel `g_n(r, r') = -p_n(r_<) q_n(r_>) / c_n` integrated against
//! `r'^{d-1} dr'`.

mod bvp;
mod green;
mod modal;
mod radial;
pub(crate) mod shooting;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::halfline::BoundaryCondition;
use crate::numerics::{
    circle_rule, gauss_interval, GridGeometry, Node, NumericsError, QuadratureGrid,
};

pub use bvp::{solve_helmholtz_bvp, solve_schrodinger_bvp, BoundaryData, SolutionField};
pub use green::{boundary_trace_kernels, green_kernel, polar_grid, KernelValue};
pub use modal::{ModalField, ModalFunction, ModeProfile};
pub(crate) use radial::wronskian_norm;
pub use radial::{
    free_dtn_mode, free_ntd_mode, radial_solutions, radial_solutions_at, RadialSolutionPair,
};

/// Smallest radius the radial equations are integrated from.
pub const RADIAL_START: f64 = 1e-8;
/// `|wronskian_norm|` below which `z` is treated as an eigenvalue.
pub const EIGENVALUE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainKind {
    Disk,
    BallRadial,
}

impl DomainKind {
    pub fn label(&self) -> &'static str {
        match self {
            DomainKind::Disk => "disk",
            DomainKind::BallRadial => "ball-radial",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeometryError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("mode {mode} exceeds the cutoff {cutoff}")]
    ModeOutOfRange { mode: i32, cutoff: usize },
    #[error("z = {z} is within {modulus:.3e} of a {bc:?} eigenvalue in mode {mode}")]
    EigenvalueProximity {
        z: Complex64,
        mode: i32,
        bc: BoundaryCondition,
        modulus: f64,
    },
    #[error("invalid modal function: {0}")]
    InvalidFunction(String),
    #[error("kernel evaluation on the diagonal x = x'")]
    Diagonal,
    #[error("radius {0} outside (0, 1]")]
    InvalidRadius(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Separable domain with its modal truncation and quadrature grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalDomain {
    kind: DomainKind,
    mode_cutoff: usize,
    radial_grid: QuadratureGrid,
    boundary_grid: QuadratureGrid,
}

impl ModalDomain {
    /// Unit disk with azimuthal modes `|n| <= mode_cutoff`, a Gauss radial
    /// grid and an equispaced boundary grid.
    pub fn disk(
        mode_cutoff: usize,
        n_radial: usize,
        n_boundary: usize,
    ) -> Result<Self, GeometryError> {
        if n_radial == 0 {
            return Err(GeometryError::InvalidDomain("radial grid is empty".into()));
        }
        if n_boundary < 2 * mode_cutoff + 1 {
            return Err(GeometryError::InvalidDomain(format!(
                "{n_boundary} boundary points cannot resolve modes up to {mode_cutoff}"
            )));
        }
        Ok(Self {
            kind: DomainKind::Disk,
            mode_cutoff,
            radial_grid: gauss_interval(n_radial, 0.0, 1.0)?,
            boundary_grid: circle_rule(n_boundary)?,
        })
    }

    /// Radial section of the unit ball (spherically symmetric functions).
    pub fn ball_radial(n_radial: usize) -> Result<Self, GeometryError> {
        if n_radial == 0 {
            return Err(GeometryError::InvalidDomain("radial grid is empty".into()));
        }
        Ok(Self {
            kind: DomainKind::BallRadial,
            mode_cutoff: 0,
            radial_grid: gauss_interval(n_radial, 0.0, 1.0)?,
            boundary_grid: QuadratureGrid::new(
                vec![Node::Polar { r: 1.0, theta: 0.0 }],
                vec![4.0 * std::f64::consts::PI],
                GridGeometry::Circle,
            )?,
        })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn mode_cutoff(&self) -> usize {
        self.mode_cutoff
    }

    pub fn radial_grid(&self) -> &QuadratureGrid {
        &self.radial_grid
    }

    pub fn boundary_grid(&self) -> &QuadratureGrid {
        &self.boundary_grid
    }

    pub fn dimension(&self) -> usize {
        match self.kind {
            DomainKind::Disk => 2,
            DomainKind::BallRadial => 3,
        }
    }

    /// Total angular measure: `2 pi` or `4 pi`.
    pub fn angular_measure(&self) -> f64 {
        match self.kind {
            DomainKind::Disk => 2.0 * std::f64::consts::PI,
            DomainKind::BallRadial => 4.0 * std::f64::consts::PI,
        }
    }

    /// Modes in increasing order.
    pub fn modes(&self) -> Vec<i32> {
        let n = self.mode_cutoff as i32;
        (-n..=n).collect()
    }

    pub fn mode_count(&self) -> usize {
        2 * self.mode_cutoff + 1
    }

    /// Position of `mode` in [`ModalDomain::modes`].
    pub fn mode_index(&self, mode: i32) -> Result<usize, GeometryError> {
        if mode.unsigned_abs() as usize > self.mode_cutoff {
            return Err(GeometryError::ModeOutOfRange {
                mode,
                cutoff: self.mode_cutoff,
            });
        }
        Ok((mode + self.mode_cutoff as i32) as usize)
    }

    pub fn with_mode_cutoff(&self, mode_cutoff: usize) -> Result<Self, GeometryError> {
        match self.kind {
            DomainKind::Disk => Self::disk(
                mode_cutoff,
                self.radial_grid.len(),
                self.boundary_grid.len().max(2 * mode_cutoff + 1),
            ),
            DomainKind::BallRadial => Ok(self.clone()),
        }
    }

    /// Radial nodes of the domain grid.
    pub fn radii(&self) -> Vec<f64> {
        self.radial_grid.abscissae()
    }

    /// Radial weights with the measure `ang r^{d-1}` folded in.
    pub fn measure_weights(&self) -> Vec<f64> {
        let d = self.dimension() as i32;
        let ang = self.angular_measure();
        self.radial_grid
            .nodes()
            .iter()
            .zip(self.radial_grid.weights())
            .map(|(n, w)| ang * n.x().powi(d - 1) * w)
            .collect()
    }

    /// `<f, g>` by the radial Gauss rule, mode by mode.
    pub fn inner(&self, f: &ModalFunction, g: &ModalFunction) -> Complex64 {
        let radii = self.radii();
        let weights = self.measure_weights();
        let mut acc = Complex64::new(0.0, 0.0);
        for n in f.modes() {
            if !g.has_mode(n) {
                continue;
            }
            for (&r, &w) in radii.iter().zip(&weights) {
                acc += f.radial(n, r).conj() * g.radial(n, r) * w;
            }
        }
        acc
    }

    /// `<f, g>` for fields sampled on the domain radii.
    pub fn field_inner(&self, f: &ModalField, g: &ModalField) -> Complex64 {
        let weights = self.measure_weights();
        let mut acc = Complex64::new(0.0, 0.0);
        for (n, fv) in f.modes.iter().zip(&f.values) {
            if let Some(gv) = g.mode(*n) {
                for ((a, b), w) in fv.iter().zip(gv).zip(&weights) {
                    acc += a.conj() * b * w;
                }
            }
        }
        acc
    }

    /// Radial order `nu` of the regular solution in `mode`.
    pub(crate) fn order(&self, mode: i32) -> f64 {
        match self.kind {
            DomainKind::Disk => mode.unsigned_abs() as f64,
            DomainKind::BallRadial => 0.0,
        }
    }

    pub(crate) fn check_mode(&self, mode: i32) -> Result<(), GeometryError> {
        self.mode_index(mode).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_shapes() {
        let d = ModalDomain::disk(3, 16, 16).unwrap();
        assert_eq!(d.modes(), vec![-3, -2, -1, 0, 1, 2, 3]);
        assert_eq!(d.mode_index(-3).unwrap(), 0);
        assert!(d.mode_index(4).is_err());
        assert!(d.radii().iter().all(|&r| r > 0.0 && r < 1.0));
        let b = ModalDomain::ball_radial(8).unwrap();
        assert_eq!(b.modes(), vec![0]);
        assert_eq!(b.boundary_grid().len(), 1);
        let vol: f64 = b.measure_weights().iter().sum();
        assert!((vol - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-13);
        assert!(ModalDomain::disk(8, 16, 10).is_err());
    }
}
