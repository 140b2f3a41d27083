//! Full-grid Nyström determinants `det(I + G_h V_h)` on polar product grids,
//! where `G_h` is the free resolvent kernel truncated to the modes the
//! angular grid resolves.
//!
//! Because the potential factors carry finitely many modes, the angular sums
//! of the full-grid matrices collapse exactly onto those modes, so the
//! full-grid determinant is evaluated through `C^r` without forming the grid
//! matrices; [`nystrom_full_grid_det`] forms them literally for small grids.
//!
//! The radial kernel has a kink on the diagonal. [`NystromRule::Plain`]
//! samples it at the Gauss nodes and converges at second order;
//! [`NystromRule::Subtracted`] writes `int g(r, r') f(r') = int g(r, r')
//! (f(r') - f(r)) + f(r) int g(r, r')`, integrating the last factor on the
//! two panels split at `r`, which smooths the sampled integrand by one order.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LabError;
use crate::geometry::{polar_grid, radial_solutions_at, DomainKind, ModalDomain};
use crate::halfline::BoundaryCondition;
use crate::numerics::{det_i_plus, gauss_interval, Node, OperatorMatrix};
use crate::parallel;
use crate::potential::FiniteRankPotential;

/// Gauss nodes per panel for the row integrals of the subtracted rule.
const ROW_PANEL_NODES: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NystromRule {
    Plain,
    #[default]
    Subtracted,
}

fn oracle_domain(
    kind: DomainKind,
    n_radial: usize,
    n_angular: usize,
) -> Result<ModalDomain, LabError> {
    Ok(match kind {
        DomainKind::Disk => {
            if n_angular < 3 {
                return Err(LabError::InvalidArgument(format!(
                    "{n_angular} angular nodes"
                )));
            }
            ModalDomain::disk((n_angular - 1) / 2, n_radial, n_angular)?
        }
        DomainKind::BallRadial => ModalDomain::ball_radial(n_radial)?,
    })
}

/// `K[a][b]` with `(G_n f)(r_a) ~ sum_b K[a][b] f(r_b)`, the free resolvent
/// of mode `n` against `r^{d-1} dr`.
fn radial_nystrom(
    domain: &ModalDomain,
    mode: i32,
    bc: BoundaryCondition,
    z: Complex64,
    rule: NystromRule,
) -> Result<Vec<Vec<Complex64>>, LabError> {
    let radii = domain.radii();
    let nr = radii.len();
    let d = domain.dimension() as i32;
    let omega: Vec<f64> = radii
        .iter()
        .zip(domain.radial_grid().weights())
        .map(|(r, w)| r.powi(d - 1) * w)
        .collect();
    let mut all = radii.clone();
    let mut panels = Vec::new();
    if rule == NystromRule::Subtracted {
        for &r in &radii {
            for (lo, hi) in [(0.0, r), (r, 1.0)] {
                let g = gauss_interval(ROW_PANEL_NODES, lo, hi)?;
                let start = all.len();
                all.extend(g.abscissae());
                panels.push((start, g.weights().to_vec()));
            }
        }
    }
    let pair = radial_solutions_at(domain, mode, bc, z, &all)?;
    let mut k: Vec<Vec<Complex64>> = (0..nr)
        .map(|a| (0..nr).map(|b| pair.kernel(a, b) * omega[b]).collect())
        .collect();
    if rule == NystromRule::Subtracted {
        for a in 0..nr {
            let mut row = Complex64::new(0.0, 0.0);
            for (start, w) in &panels[2 * a..2 * a + 2] {
                for (i, wi) in w.iter().enumerate() {
                    row += pair.kernel(a, start + i) * (all[start + i].powi(d - 1) * wi);
                }
            }
            let off: Complex64 = (0..nr).filter(|&b| b != a).map(|b| k[a][b]).sum();
            k[a][a] = row - off;
        }
    }
    Ok(k)
}

/// Full-grid Nyström value of `det(I + u G_0^{bc}(z) v)` on the
/// `n_radial x n_angular` polar grid (`n_radial` points on the ball).
pub fn nystrom_bs_det(
    v: &FiniteRankPotential,
    bc: BoundaryCondition,
    z: Complex64,
    n_radial: usize,
    n_angular: usize,
    rule: NystromRule,
) -> Result<Complex64, LabError> {
    let domain = oracle_domain(v.domain().kind(), n_radial, n_angular)?;
    for f in v.left_factors().iter().chain(v.right_factors()) {
        f.check_domain(&domain)?;
    }
    let modes = v.modes();
    let kernels = parallel::map_slice(&modes, |&n| radial_nystrom(&domain, n, bc, z, rule));
    let radii = domain.radii();
    let mw = domain.measure_weights();
    let r = v.rank();
    let mut m = OperatorMatrix::zeros(r, r);
    for (kn, &n) in kernels.into_iter().zip(&modes) {
        let kn = kn?;
        for k in 0..r {
            let psi: Vec<Complex64> = radii
                .iter()
                .map(|&x| v.left_factors()[k].radial(n, x))
                .collect();
            let gpsi: Vec<Complex64> = kn
                .iter()
                .map(|row| row.iter().zip(&psi).map(|(a, b)| a * b).sum())
                .collect();
            for j in 0..r {
                let s: Complex64 = radii
                    .iter()
                    .zip(&mw)
                    .zip(&gpsi)
                    .map(|((&x, w), g)| v.right_factors()[j].radial(n, x).conj() * w * g)
                    .sum();
                m[(j, k)] += s * v.couplings()[k];
            }
        }
    }
    Ok(det_i_plus(&m)?.value)
}

/// `det(I + G_h V_h)` with both grid matrices formed explicitly; dense in the
/// number of grid points.
pub fn nystrom_full_grid_det(
    v: &FiniteRankPotential,
    bc: BoundaryCondition,
    z: Complex64,
    n_radial: usize,
    n_angular: usize,
    rule: NystromRule,
) -> Result<Complex64, LabError> {
    let domain = oracle_domain(v.domain().kind(), n_radial, n_angular)?;
    let grid = polar_grid(&domain)?;
    let modes: Vec<i32> = (0..=domain.mode_cutoff() as i32).collect();
    let kernels = parallel::map_slice(&modes, |&n| radial_nystrom(&domain, n, bc, z, rule));
    let kernels = kernels.into_iter().collect::<Result<Vec<_>, _>>()?;
    let per_radius = match domain.kind() {
        DomainKind::Disk => n_angular,
        DomainKind::BallRadial => 1,
    };
    let theta = |x: Node| match x {
        Node::Polar { theta, .. } => theta,
        Node::Line(_) => 0.0,
    };
    let nodes = grid.nodes();
    let w = grid.weights();
    // f_n(r_b) = sum_l f(r_b, theta_l) e^{-i n theta_l} / N, then G_n per mode
    let g = OperatorMatrix::from_fn(grid.len(), grid.len(), |i, j| {
        let (a, b) = (i / per_radius, j / per_radius);
        let dt = theta(nodes[i]) - theta(nodes[j]);
        let mut s = kernels[0][a][b];
        for (n, kn) in kernels.iter().enumerate().skip(1) {
            s += kn[a][b] * (2.0 * (n as f64 * dt).cos());
        }
        s / per_radius as f64
    });
    let vm = OperatorMatrix::from_fn(grid.len(), grid.len(), |i, j| {
        v.kernel(nodes[i], nodes[j]) * w[j]
    });
    Ok(det_i_plus(&g.matmul(&vm)?)?.value)
}
