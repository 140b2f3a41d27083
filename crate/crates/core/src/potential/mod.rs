//! Finite-rank nonlocal potentials `V = sum_j kappa_j <phi_j, .> psi_j` on a
//! modal domain, factored through `C^r` as `V = v u` with
//! `u f = (<phi_j, f>)_j` and `v c = sum_j c_j kappa_j psi_j`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, ModalDomain, ModalField, ModalFunction};
use crate::numerics::{Node, NumericsError, OperatorMatrix, QuadratureGrid};

/// Largest supported rank.
pub const MAX_RANK: usize = 64;
/// Relative size of `||V - V^*||_HS` below which `V` is flagged self-adjoint.
pub const SELF_ADJOINT_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PotentialError {
    #[error("rank {0} outside 1..={MAX_RANK}")]
    Rank(usize),
    #[error("{couplings} couplings, {left} left and {right} right factors")]
    LengthMismatch {
        couplings: usize,
        left: usize,
        right: usize,
    },
    #[error("{side} factor {index} has zero norm")]
    ZeroFactor { side: &'static str, index: usize },
    #[error("non-finite coupling at index {0}")]
    InvalidCoupling(usize),
    #[error("grid function does not match the domain grid")]
    GridMismatch,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRankPotential {
    domain: ModalDomain,
    couplings: Vec<Complex64>,
    left: Vec<ModalFunction>,
    right: Vec<ModalFunction>,
    trace_norm: f64,
    hilbert_schmidt_norm: f64,
    self_adjoint: bool,
}

/// `V = v u` through `C^r`: rows `<phi_j, .>` and columns `kappa_j psi_j`,
/// sampled on the domain radii.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorPair {
    domain: ModalDomain,
    pub u_rows: Vec<ModalField>,
    pub v_columns: Vec<ModalField>,
}

impl FactorPair {
    pub fn rank(&self) -> usize {
        self.u_rows.len()
    }

    /// `u f = (<phi_j, f>)_j`.
    pub fn u_apply(&self, f: &ModalField) -> Result<Vec<Complex64>, PotentialError> {
        check_field(&self.domain, f)?;
        Ok(self
            .u_rows
            .iter()
            .map(|phi| self.domain.field_inner(phi, f))
            .collect())
    }

    /// `v c = sum_j c_j kappa_j psi_j`.
    pub fn v_apply(&self, c: &[Complex64]) -> Result<ModalField, PotentialError> {
        if c.len() != self.rank() {
            return Err(PotentialError::GridMismatch);
        }
        let mut out = ModalField::zeros(self.domain.modes(), self.domain.radii());
        for (cj, col) in c.iter().zip(&self.v_columns) {
            for (o, v) in out
                .values
                .iter_mut()
                .flatten()
                .zip(col.values.iter().flatten())
            {
                *o += cj * v;
            }
        }
        Ok(out)
    }
}

fn check_field(domain: &ModalDomain, f: &ModalField) -> Result<(), PotentialError> {
    if f.modes != domain.modes() || f.radii != domain.radii() {
        return Err(PotentialError::GridMismatch);
    }
    Ok(())
}

fn gram(domain: &ModalDomain, fs: &[ModalFunction], gs: &[ModalFunction]) -> DMatrix<Complex64> {
    DMatrix::from_fn(fs.len(), gs.len(), |i, j| domain.inner(&fs[i], &gs[j]))
}

/// Hermitian square root of a positive semidefinite Gram matrix.
fn gram_sqrt(g: DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = g.symmetric_eigen();
    let d = DMatrix::from_diagonal(
        &eig.eigenvalues
            .map(|l| Complex64::new(l.max(0.0).sqrt(), 0.0)),
    );
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Builds `V = sum_j kappa_j <phi_j, .> psi_j` with `psi_j = left[j]` and
/// `phi_j = right[j]`.
pub fn make_potential(
    couplings: Vec<Complex64>,
    left: Vec<ModalFunction>,
    right: Vec<ModalFunction>,
    domain: &ModalDomain,
) -> Result<FiniteRankPotential, PotentialError> {
    let r = couplings.len();
    if r == 0 || r > MAX_RANK {
        return Err(PotentialError::Rank(r));
    }
    if left.len() != r || right.len() != r {
        return Err(PotentialError::LengthMismatch {
            couplings: r,
            left: left.len(),
            right: right.len(),
        });
    }
    if let Some(i) = couplings
        .iter()
        .position(|k| !k.re.is_finite() || !k.im.is_finite())
    {
        return Err(PotentialError::InvalidCoupling(i));
    }
    for (side, fs) in [("left", &left), ("right", &right)] {
        for (index, f) in fs.iter().enumerate() {
            f.check_domain(domain)?;
            if domain.inner(f, f).re <= 0.0 {
                return Err(PotentialError::ZeroFactor { side, index });
            }
        }
    }

    let g_left = gram(domain, &left, &left);
    let g_right = gram(domain, &right, &right);
    let cross = gram(domain, &left, &right);
    let k = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(couplings.clone()));

    // singular values of V = Psi K Phi^* are those of G_psi^{1/2} K G_phi^{1/2}
    let core = gram_sqrt(g_left.clone()) * &k * gram_sqrt(g_right.clone());
    let trace_norm = core.singular_values().iter().sum();

    // ||V||^2 = tr(K^* G_psi K G_phi), ||V - V^*||^2 = 2 ||V||^2 - 2 Re tr((K^* C)^2)
    let hs2 = (k.adjoint() * &g_left * &k * &g_right).trace().re.max(0.0);
    let kc = k.adjoint() * &cross;
    let defect2 = (2.0 * hs2 - 2.0 * (&kc * &kc).trace().re).max(0.0);
    let self_adjoint = defect2.sqrt() <= SELF_ADJOINT_TOLERANCE * hs2.sqrt().max(f64::MIN_POSITIVE);

    Ok(FiniteRankPotential {
        domain: domain.clone(),
        couplings,
        left,
        right,
        trace_norm,
        hilbert_schmidt_norm: hs2.sqrt(),
        self_adjoint,
    })
}

impl FiniteRankPotential {
    /// The rank-one zero potential.
    pub fn zero(domain: &ModalDomain) -> Result<Self, PotentialError> {
        let bump = ModalFunction::single(0, 1.0, vec![Complex64::new(1.0, 0.0)])?;
        make_potential(
            vec![Complex64::new(0.0, 0.0)],
            vec![bump.clone()],
            vec![bump],
            domain,
        )
    }

    pub fn rank(&self) -> usize {
        self.couplings.len()
    }

    pub fn domain(&self) -> &ModalDomain {
        &self.domain
    }

    pub fn couplings(&self) -> &[Complex64] {
        &self.couplings
    }

    /// `psi_j`.
    pub fn left_factors(&self) -> &[ModalFunction] {
        &self.left
    }

    /// `phi_j`.
    pub fn right_factors(&self) -> &[ModalFunction] {
        &self.right
    }

    pub fn trace_norm(&self) -> f64 {
        self.trace_norm
    }

    pub fn hilbert_schmidt_norm(&self) -> f64 {
        self.hilbert_schmidt_norm
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    pub fn is_zero(&self) -> bool {
        self.couplings.iter().all(|k| k.norm() == 0.0)
    }

    /// `tr V = sum_j kappa_j <phi_j, psi_j>`.
    pub fn trace(&self) -> Complex64 {
        self.couplings
            .iter()
            .zip(self.left.iter().zip(&self.right))
            .map(|(k, (psi, phi))| k * self.domain.inner(phi, psi))
            .sum()
    }

    /// Every mode carried by some factor, increasing.
    pub fn modes(&self) -> Vec<i32> {
        let mut m: Vec<i32> = self
            .left
            .iter()
            .chain(&self.right)
            .flat_map(|f| f.modes())
            .collect();
        m.sort_unstable();
        m.dedup();
        m
    }

    /// `V(x, y) = sum_j kappa_j psi_j(x) conj(phi_j(y))`.
    pub fn kernel(&self, x: Node, y: Node) -> Complex64 {
        let (rx, tx) = polar(x);
        let (ry, ty) = polar(y);
        self.couplings
            .iter()
            .zip(self.left.iter().zip(&self.right))
            .map(|(k, (psi, phi))| k * psi.evaluate(rx, tx) * phi.evaluate(ry, ty).conj())
            .sum()
    }

    /// Weight-symmetrized kernel matrix on an interior grid.
    pub fn nystrom_matrix(&self, grid: &QuadratureGrid) -> OperatorMatrix {
        let nodes = grid.nodes();
        let w = grid.weights();
        OperatorMatrix::from_fn(grid.len(), grid.len(), |i, j| {
            self.kernel(nodes[i], nodes[j]) * (w[i] * w[j]).sqrt()
        })
    }
}

fn polar(x: Node) -> (f64, f64) {
    match x {
        Node::Polar { r, theta } => (r, theta),
        Node::Line(r) => (r, 0.0),
    }
}

/// `V f` for `f` sampled on the domain radii.
pub fn apply(v: &FiniteRankPotential, f: &ModalField) -> Result<ModalField, PotentialError> {
    let pair = factorize(v);
    let c = pair.u_apply(f)?;
    pair.v_apply(&c)
}

/// The `C^r`-mediated factor pair of `V`.
pub fn factorize(v: &FiniteRankPotential) -> FactorPair {
    let radii = v.domain.radii();
    let u_rows = v
        .right
        .iter()
        .map(|phi| phi.sample(&v.domain, &radii))
        .collect();
    let v_columns = v
        .left
        .iter()
        .zip(&v.couplings)
        .map(|(psi, k)| psi.scale(*k).sample(&v.domain, &radii))
        .collect();
    FactorPair {
        domain: v.domain.clone(),
        u_rows,
        v_columns,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn disk() -> ModalDomain {
        ModalDomain::disk(4, 32, 16).unwrap()
    }

    #[test]
    fn normalized_bump_projector() {
        let d = disk();
        let f = ModalFunction::single(0, 2.0, vec![c(1.0)]).unwrap();
        let norm = d.inner(&f, &f).re.sqrt();
        let f = f.scale(c(1.0 / norm));
        let v = make_potential(vec![c(1.0)], vec![f.clone()], vec![f], &d).unwrap();
        assert!((v.trace_norm() - 1.0).abs() < 1e-12);
        assert!(v.is_self_adjoint());
        assert!((v.trace() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let d = disk();
        let f = ModalFunction::single(1, 0.0, vec![c(1.0)]).unwrap();
        let z = ModalFunction::zero();
        assert!(matches!(
            make_potential(vec![c(1.0)], vec![z], vec![f.clone()], &d),
            Err(PotentialError::ZeroFactor { side: "left", .. })
        ));
        let high = ModalFunction::single(5, 0.0, vec![c(1.0)]).unwrap();
        assert!(make_potential(vec![c(1.0)], vec![high], vec![f.clone()], &d).is_err());
        assert!(make_potential(vec![], vec![], vec![], &d).is_err());
        let ball = ModalDomain::ball_radial(16).unwrap();
        assert!(make_potential(vec![c(1.0)], vec![f.clone()], vec![f], &ball).is_err());
    }

    #[test]
    fn zero_potential_applies_to_zero() {
        let d = disk();
        let v = FiniteRankPotential::zero(&d).unwrap();
        assert!(v.is_zero());
        let f = ModalFunction::single(0, 0.0, vec![c(1.0), c(2.0)]).unwrap();
        let out = apply(&v, &f.sample(&d, &d.radii())).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn non_hermitian_pair_is_not_flagged() {
        let d = disk();
        let f = ModalFunction::single(1, 0.0, vec![c(1.0)]).unwrap();
        let g = ModalFunction::single(1, 1.0, vec![c(1.0), c(1.0)]).unwrap();
        let v = make_potential(vec![c(1.0)], vec![f.clone()], vec![g], &d).unwrap();
        assert!(!v.is_self_adjoint());
        let v =
            make_potential(vec![Complex64::new(0.0, 1.0)], vec![f.clone()], vec![f], &d).unwrap();
        assert!(!v.is_self_adjoint());
    }
}
