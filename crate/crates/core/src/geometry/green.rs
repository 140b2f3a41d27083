//! Point evaluation of the free Green's functions and the boundary trace
//! kernels sampled on quadrature grids.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::radial::{radial_solutions_at, wronskian_norm};
use super::shooting::shoot_mode;
use super::{DomainKind, GeometryError, ModalDomain};
use crate::halfline::BoundaryCondition;
use crate::numerics::{disk_rule, radial_ball_rule, Node, OperatorMatrix, QuadratureGrid};
use crate::parallel;

/// Kernel value together with the size of the last retained mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: Complex64,
    pub last_mode_contribution: f64,
    /// Set when the last retained mode contributes more than `1e-10`.
    pub truncated: bool,
}

const TRUNCATION_FLAG: f64 = 1e-10;

fn polar(x: Node) -> (f64, f64) {
    match x {
        Node::Polar { r, theta } => (r, theta),
        Node::Line(r) => (r, 0.0),
    }
}

/// `G_0^{bc}(z; x, x')` for interior points given in polar form.
pub fn green_kernel(
    domain: &ModalDomain,
    bc: BoundaryCondition,
    z: Complex64,
    x: Node,
    x_prime: Node,
) -> Result<KernelValue, GeometryError> {
    let (r, th) = polar(x);
    let (rp, thp) = polar(x_prime);
    let same_direction =
        domain.kind() == DomainKind::BallRadial || (th - thp).rem_euclid(2.0 * PI) == 0.0;
    if r == rp && same_direction {
        return Err(GeometryError::Diagonal);
    }
    let radii = [r, rp];
    let angular = match domain.kind() {
        DomainKind::Disk => 1.0 / (2.0 * PI),
        DomainKind::BallRadial => 1.0 / (4.0 * PI),
    };
    let mut value = Complex64::new(0.0, 0.0);
    let mut last = 0.0;
    for n in 0..=domain.mode_cutoff() as i32 {
        let pair = radial_solutions_at(domain, n, bc, z, &radii)?;
        let g = pair.kernel(0, 1);
        let term = if n == 0 {
            g * angular
        } else {
            g * (2.0 * angular * (n as f64 * (th - thp)).cos())
        };
        value += term;
        last = term.norm();
    }
    Ok(KernelValue {
        value,
        last_mode_contribution: last,
        truncated: last > TRUNCATION_FLAG,
    })
}

/// Interior product grid of the domain: radial nodes times the boundary
/// angles (disk) or the radial ball rule.
pub fn polar_grid(domain: &ModalDomain) -> Result<QuadratureGrid, GeometryError> {
    Ok(match domain.kind() {
        DomainKind::Disk => disk_rule(domain.radial_grid().len(), domain.boundary_grid().len())?,
        DomainKind::BallRadial => radial_ball_rule(domain.radial_grid().len())?,
    })
}

/// Weight-symmetrized samples of the trace kernels
///
/// * `A_D(xi, x') = d_r G_0^D(z; xi, x')` at `|xi| = 1` (boundary x interior),
/// * `B_N(x, xi') = G_0^N(z; x, xi')` (interior x boundary),
///
/// the latter being the kernel of the adjoint of `gamma_D (H_0^N - conj z)^{-1}`.
pub fn boundary_trace_kernels(
    domain: &ModalDomain,
    z: Complex64,
) -> Result<(OperatorMatrix, OperatorMatrix), GeometryError> {
    let interior = Arc::new(polar_grid(domain)?);
    let boundary = Arc::new(domain.boundary_grid().clone());
    let radii = domain.radii();
    let modes: Vec<i32> = (0..=domain.mode_cutoff() as i32).collect();
    // per |n|: p_n on the radial grid scaled by 1/p(1) and 1/p'(1)
    let shots = parallel::map_slice(&modes, |&n| -> Result<_, GeometryError> {
        let shot = shoot_mode(domain, n, z, &[], &[], &radii)?;
        wronskian_norm(n, BoundaryCondition::Dirichlet, z, shot.p1, shot.dp1)?;
        wronskian_norm(n, BoundaryCondition::Neumann, z, shot.p1, shot.dp1)?;
        let dir: Vec<Complex64> = shot.p.iter().map(|p| p / shot.p1).collect();
        let neu: Vec<Complex64> = shot.p.iter().map(|p| p / shot.dp1).collect();
        Ok((dir, neu))
    });
    let shots: Vec<(Vec<Complex64>, Vec<Complex64>)> =
        shots.into_iter().collect::<Result<_, _>>()?;
    let angular = match domain.kind() {
        DomainKind::Disk => 1.0 / (2.0 * PI),
        DomainKind::BallRadial => 1.0 / (4.0 * PI),
    };
    let n_angular = domain.boundary_grid().len();
    let radial_index = |col: usize| match domain.kind() {
        DomainKind::Disk => col / n_angular,
        DomainKind::BallRadial => col,
    };
    let modal_sum = |dtheta: f64, pick: &dyn Fn(&(Vec<Complex64>, Vec<Complex64>)) -> Complex64| {
        let mut s = pick(&shots[0]);
        for (n, shot) in shots.iter().enumerate().skip(1) {
            s += pick(shot) * (2.0 * (n as f64 * dtheta).cos());
        }
        s * angular
    };
    let bnodes: Vec<(f64, f64)> = boundary.nodes().iter().map(|&n| polar(n)).collect();
    let inodes: Vec<(f64, f64)> = interior.nodes().iter().map(|&n| polar(n)).collect();
    let a_d = OperatorMatrix::nystrom(boundary.clone(), interior.clone(), |i, j| {
        let a = radial_index(j);
        -modal_sum(bnodes[i].1 - inodes[j].1, &|s| s.0[a])
    });
    let b_n = OperatorMatrix::nystrom(interior, boundary, |i, j| {
        let a = radial_index(i);
        modal_sum(inodes[i].1 - bnodes[j].1, &|s| s.1[a])
    });
    Ok((a_d, b_n))
}
