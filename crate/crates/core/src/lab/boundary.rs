//! Boundary operators of finite rank: the Dirichlet-side correction
//! `T = gamma_N (H^D - z)^{-1} V [gamma_D (H_0^N - conj z)^{-1}]^*` and the
//! perturbed Dirichlet-to-Neumann map in difference and product form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{LabError, ModalReduction};
use crate::geometry::{boundary_trace_kernels, polar_grid, BoundaryData, ModalDomain, ModalField};
use crate::halfline::BoundaryCondition;
use crate::numerics::{det, Node, OperatorMatrix};
use crate::potential::{factorize, FiniteRankPotential};

/// Relative singular-value cutoff for the numerical rank.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssemblyRoute {
    /// `M_0^D - M^D` with `M^D` from perturbed boundary value problems.
    DifferenceForm,
    /// Modal product `gamma_N (H^D - z)^{-1} V B_N` of the perturbed traces
    /// with the free Neumann pairing.
    ProductForm,
    /// Quadrature against the sampled trace kernels `A_D` and `B_N`.
    TraceKernel,
}

/// A boundary operator given on the boundary grid (weight-symmetrized) and
/// on the boundary modes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOperator {
    pub matrix: OperatorMatrix,
    /// `modal[(m, n)]`: coefficient of `e^{i modes[m] theta}` in the image of
    /// `e^{i modes[n] theta}`.
    pub modal: OperatorMatrix,
    pub rank_bound: usize,
    pub assembly_route: AssemblyRoute,
    /// Weight-scaled factors with `matrix = sum_j left_j right_j^T`, when the
    /// operator was assembled from them.
    pub factors: Vec<(Vec<Complex64>, Vec<Complex64>)>,
}

impl BoundaryOperator {
    pub fn numerical_rank(&self) -> usize {
        self.matrix.numerical_rank(RANK_TOLERANCE)
    }

    /// `det(I - T)` on the boundary grid.
    pub fn det_identity_minus(&self) -> Result<Complex64, LabError> {
        Ok(det(&OperatorMatrix::identity(self.matrix.rows()).sub(&self.matrix)?)?.value)
    }

    /// `det(I - T)` on the boundary modes.
    pub fn modal_det_identity_minus(&self) -> Result<Complex64, LabError> {
        Ok(det(&OperatorMatrix::identity(self.modal.rows()).sub(&self.modal)?)?.value)
    }

    /// `det` of the modal matrix itself.
    pub fn modal_det(&self) -> Result<Complex64, LabError> {
        Ok(det(&self.modal)?.value)
    }

    /// `det(I_r - N)` with `N_jk = right_j . left_k`.
    pub fn reduced_det_identity_minus(&self) -> Result<Complex64, LabError> {
        let r = self.factors.len();
        if r == 0 {
            return Err(LabError::InvalidArgument(
                "operator carries no factors".into(),
            ));
        }
        let n = OperatorMatrix::from_fn(r, r, |j, k| {
            -self.factors[j]
                .1
                .iter()
                .zip(&self.factors[k].0)
                .map(|(b, a)| b * a)
                .sum::<Complex64>()
        });
        Ok(crate::numerics::det_i_plus(&n)?.value)
    }
}

fn boundary_angles(domain: &ModalDomain) -> Vec<f64> {
    domain
        .boundary_grid()
        .nodes()
        .iter()
        .map(|n| match n {
            Node::Polar { theta, .. } => *theta,
            Node::Line(_) => 0.0,
        })
        .collect()
}

/// Columns `sqrt(w_i / ang) e^{i n theta_i}`: orthonormal once the grid
/// resolves the modes.
fn sampling(domain: &ModalDomain) -> OperatorMatrix {
    let theta = boundary_angles(domain);
    let w = domain.boundary_grid().weights();
    let ang = domain.angular_measure();
    let modes = domain.modes();
    OperatorMatrix::from_fn(theta.len(), modes.len(), |i, m| {
        Complex64::from_polar((w[i] / ang).sqrt(), modes[m] as f64 * theta[i])
    })
}

/// Grid matrix `F T F^*` of a modal operator.
fn modal_to_grid(domain: &ModalDomain, modal: &OperatorMatrix) -> Result<OperatorMatrix, LabError> {
    let f = sampling(domain);
    Ok(f.matmul(modal)?.matmul(&f.adjoint())?)
}

/// Modal matrix `F^* T F` of a grid operator.
fn grid_to_modal(domain: &ModalDomain, grid: &OperatorMatrix) -> Result<OperatorMatrix, LabError> {
    let f = sampling(domain);
    Ok(f.adjoint().matmul(grid)?.matmul(&f)?)
}

fn check_kind(domain: &ModalDomain, v: &FiniteRankPotential) -> Result<(), LabError> {
    if domain.kind() != v.domain().kind() {
        return Err(LabError::DomainMismatch);
    }
    Ok(())
}

/// Field sampled on the interior polar grid of `domain`.
fn on_polar_grid(domain: &ModalDomain, f: &ModalField) -> Vec<Complex64> {
    let theta = boundary_angles(domain);
    let mut out = Vec::with_capacity(f.radii.len() * theta.len());
    for a in 0..f.radii.len() {
        match domain.kind() {
            crate::geometry::DomainKind::Disk => {
                out.extend(theta.iter().map(|&t| f.evaluate(a, t)))
            }
            crate::geometry::DomainKind::BallRadial => out.push(f.evaluate(a, 0.0)),
        }
    }
    out
}

/// Weight-scaled boundary samples of `a_j = gamma_N (H^D - z)^{-1} psi_j`
/// (times `kappa_j`) and of `b_j = <phi_j, G_0^N(z; ., xi')>`, by quadrature
/// against the trace kernels. `neumann_inverse` replaces `b` by
/// `(I + M^N)^{-1} b` and `a` by the free `gamma_N G_0^D psi_j`.
fn trace_kernel_factors(
    domain: &ModalDomain,
    v: &FiniteRankPotential,
    z: Complex64,
    neumann_inverse: bool,
) -> Result<(Vec<Vec<Complex64>>, Vec<Vec<Complex64>>), LabError> {
    let reduction = ModalReduction::new(domain, v, z, &domain.radii())?;
    reduction.check_free(BoundaryCondition::Dirichlet)?;
    reduction.check_free(BoundaryCondition::Neumann)?;
    let (a_d, b_n) = boundary_trace_kernels(domain, z)?;
    let grid = polar_grid(domain)?;
    let sqrt_w: Vec<f64> = grid.weights().iter().map(|w| w.sqrt()).collect();
    let pair = factorize(v);
    let r = v.rank();

    let mut a = Vec::with_capacity(r);
    for j in 0..r {
        // gamma_N R^D psi_j = A_D (psi_j - V R^D psi_j), or A_D psi_j
        let psi = v.left_factors()[j].sample(domain, &domain.radii());
        let h = if neumann_inverse {
            psi
        } else {
            let rpsi = reduction
                .perturbed_resolvent(BoundaryCondition::Dirichlet, j)?
                .field;
            let vr = pair.v_apply(&pair.u_apply(&rpsi)?)?;
            let mut h = psi;
            for (x, y) in h
                .values
                .iter_mut()
                .flatten()
                .zip(vr.values.iter().flatten())
            {
                *x -= y;
            }
            h
        };
        let hw: Vec<Complex64> = on_polar_grid(domain, &h)
            .iter()
            .zip(&sqrt_w)
            .map(|(x, s)| x * s)
            .collect();
        let col = a_d.matvec(&hw)?;
        a.push(
            col.into_iter()
                .map(|x| x * v.couplings()[j])
                .collect::<Vec<_>>(),
        );
    }

    let b_adj = b_n.adjoint();
    let mut b: Vec<Vec<Complex64>> = Vec::with_capacity(r);
    for phi in v.right_factors() {
        // sqrt(w_l) b(xi_l) = sum_x sqrt(w_x) conj(phi(x)) B_N(x, xi_l) sqrt(w_l)
        let pw: Vec<Complex64> = on_polar_grid(domain, &phi.sample(domain, &domain.radii()))
            .iter()
            .zip(&sqrt_w)
            .map(|(x, s)| x * s)
            .collect();
        b.push(b_adj.matvec(&pw)?.into_iter().map(|x| x.conj()).collect());
    }
    if neumann_inverse {
        let m = reduction.bs_matrix(BoundaryCondition::Neumann)?;
        let lu = crate::numerics::Lu::new(&m.plus_identity())?;
        let nb = b[0].len();
        let mut out = vec![vec![Complex64::new(0.0, 0.0); nb]; r];
        for l in 0..nb {
            let col: Vec<Complex64> = (0..r).map(|j| b[j][l]).collect();
            let sol = lu.solve(&col)?;
            for j in 0..r {
                out[j][l] = sol[j];
            }
        }
        b = out;
    }
    Ok((a, b))
}

fn from_factors(
    domain: &ModalDomain,
    a: Vec<Vec<Complex64>>,
    b: Vec<Vec<Complex64>>,
    route: AssemblyRoute,
) -> Result<BoundaryOperator, LabError> {
    let nb = domain.boundary_grid().len();
    let matrix = OperatorMatrix::from_fn(nb, nb, |i, l| {
        a.iter().zip(&b).map(|(aj, bj)| aj[i] * bj[l]).sum()
    });
    let modal = grid_to_modal(domain, &matrix)?;
    Ok(BoundaryOperator {
        matrix,
        modal,
        rank_bound: a.len(),
        assembly_route: route,
        factors: a.into_iter().zip(b).collect(),
    })
}

/// `T = gamma_N (H^D - z)^{-1} V [gamma_D (H_0^N - conj z)^{-1}]^*` assembled
/// from the trace kernels; `det(I - T)` equals the ratio of the Neumann and
/// Dirichlet interior determinants.
pub fn dirichlet_boundary_operator(
    domain: &ModalDomain,
    v: &FiniteRankPotential,
    z: Complex64,
) -> Result<BoundaryOperator, LabError> {
    check_kind(domain, v)?;
    let (a, b) = trace_kernel_factors(domain, v, z, false)?;
    from_factors(domain, a, b, AssemblyRoute::TraceKernel)
}

/// `gamma_N (H_0^D - z)^{-1} V [gamma_D ((H^N - z)^{-1})^*]^*`, whose
/// `det(I + .)` is the reciprocal of the Dirichlet-side boundary determinant.
pub(crate) fn neumann_boundary_operator(
    domain: &ModalDomain,
    v: &FiniteRankPotential,
    z: Complex64,
) -> Result<BoundaryOperator, LabError> {
    check_kind(domain, v)?;
    let (a, b) = trace_kernel_factors(domain, v, z, true)?;
    from_factors(domain, a, b, AssemblyRoute::TraceKernel)
}

/// The perturbed Dirichlet-to-Neumann map in both forms.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnPair {
    /// `M_0^D(z) - M^D(z)`.
    pub difference: BoundaryOperator,
    /// `M^D(z) M_0^D(z)^{-1} = I - gamma_N (H^D - z)^{-1} V B_N`.
    pub ratio: BoundaryOperator,
    /// `max |difference M_0^{-1} - (I - ratio)| / max(1, max |I - ratio|)`
    /// over the boundary modes.
    pub reconciliation_residual: f64,
    /// Free Dirichlet-to-Neumann eigenvalues per mode.
    pub free_dtn: Vec<Complex64>,
}

/// `M^D` on each boundary mode from the perturbed Dirichlet problem, and the
/// product-form correction from the perturbed traces.
pub fn dtn_perturbed(
    domain: &ModalDomain,
    v: &FiniteRankPotential,
    z: Complex64,
) -> Result<DtnPair, LabError> {
    check_kind(domain, v)?;
    let reduction = ModalReduction::new(domain, v, z, &[])?;
    reduction.check_free(BoundaryCondition::Neumann)?;
    let modes = domain.modes();
    let nm = modes.len();
    let free = reduction.free_boundary_map(BoundaryCondition::Dirichlet);

    let mut perturbed = OperatorMatrix::zeros(nm, nm);
    for (n, &mode) in modes.iter().enumerate() {
        let data = BoundaryData::mode(mode, Complex64::new(1.0, 0.0)).to_vector(domain)?;
        let sol = reduction.solve_bvp(BoundaryCondition::Dirichlet, &data)?;
        for m in 0..nm {
            perturbed[(m, n)] = -sol.boundary_derivatives[m];
        }
    }
    let difference_modal = OperatorMatrix::diagonal(&free).sub(&perturbed)?;

    // T_mn = sum_j kappa_j a_{j,m} <phi_j, B_N e^{i n theta}>
    let traces = reduction.perturbed_traces(BoundaryCondition::Dirichlet)?;
    let boundary = reduction.regular_boundary();
    let kappa = v.couplings();
    let correction = OperatorMatrix::from_fn(nm, nm, |m, n| {
        (0..v.rank())
            .map(|j| kappa[j] * traces[j][m] * reduction.regular_pairing(j, n) / boundary[n].1)
            .sum()
    });
    let ratio_modal = OperatorMatrix::identity(nm).sub(&correction)?;

    let mut worst = 0.0f64;
    for m in 0..nm {
        for n in 0..nm {
            worst = worst.max((difference_modal[(m, n)] / free[n] - correction[(m, n)]).norm());
        }
    }
    let reconciliation_residual = worst / correction.max_abs().max(1.0);

    let difference = BoundaryOperator {
        matrix: modal_to_grid(domain, &difference_modal)?,
        modal: difference_modal,
        rank_bound: v.rank(),
        assembly_route: AssemblyRoute::DifferenceForm,
        factors: Vec::new(),
    };
    let ratio = BoundaryOperator {
        matrix: modal_to_grid(domain, &ratio_modal)?,
        modal: ratio_modal,
        rank_bound: v.rank(),
        assembly_route: AssemblyRoute::ProductForm,
        factors: Vec::new(),
    };
    Ok(DtnPair {
        difference,
        ratio,
        reconciliation_residual,
        free_dtn: free,
    })
}

/// `M^N(z)` on the boundary modes from the perturbed Neumann problem, with
/// the free map `M_0^N(z)` per mode.
pub(crate) fn ntd_perturbed(
    domain: &ModalDomain,
    v: &FiniteRankPotential,
    z: Complex64,
) -> Result<(OperatorMatrix, Vec<Complex64>), LabError> {
    check_kind(domain, v)?;
    let reduction = ModalReduction::new(domain, v, z, &[])?;
    reduction.check_free(BoundaryCondition::Dirichlet)?;
    let modes = domain.modes();
    let nm = modes.len();
    let mut perturbed = OperatorMatrix::zeros(nm, nm);
    for (n, &mode) in modes.iter().enumerate() {
        let data = BoundaryData::mode(mode, Complex64::new(1.0, 0.0)).to_vector(domain)?;
        let sol = reduction.solve_bvp(BoundaryCondition::Neumann, &data)?;
        for m in 0..nm {
            perturbed[(m, n)] = sol.boundary_values[m];
        }
    }
    Ok((
        perturbed,
        reduction.free_boundary_map(BoundaryCondition::Neumann),
    ))
}
