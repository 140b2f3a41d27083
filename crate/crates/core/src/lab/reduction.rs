//! The rank-`r` reduction of interior resolvents and Birman–Schwinger
//! operators, built from one outward radial pass per mode.

use num_complex::Complex64;

use super::LabError;
use crate::geometry::shooting::{shoot_mode, ModeShot};
use crate::geometry::{GeometryError, ModalDomain, ModalField, ModalFunction, SolutionField};
use crate::halfline::BoundaryCondition;
use crate::numerics::{Lu, OperatorMatrix};
use crate::parallel;
use crate::potential::FiniteRankPotential;

/// `|det(I_r + M)|` below which `z` is reported as a perturbed eigenvalue.
pub const PERTURBED_EIGENVALUE_THRESHOLD: f64 = 1e-12;

/// Per-mode radial data of `V = sum_j kappa_j <phi_j, .> psi_j` at one `z`:
/// the regular solutions, the particular solutions `(-Delta - z) w = s_k` for
/// the sources `s = (psi_1, .., psi_r, extra..)`, and their pairings with the
/// `phi_j`.
#[derive(Debug, Clone)]
pub struct ModalReduction {
    domain: ModalDomain,
    z: Complex64,
    couplings: Vec<Complex64>,
    n_sources: usize,
    radii: Vec<f64>,
    modes: Vec<i32>,
    shots: Vec<ModeShot>,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

impl ModalReduction {
    pub fn new(
        domain: &ModalDomain,
        v: &FiniteRankPotential,
        z: Complex64,
        radii: &[f64],
    ) -> Result<Self, LabError> {
        Self::with_sources(domain, v, z, radii, &[])
    }

    /// As [`ModalReduction::new`] with further sources `f` whose free and
    /// perturbed resolvents become available after `psi_1..psi_r`.
    pub fn with_sources(
        domain: &ModalDomain,
        v: &FiniteRankPotential,
        z: Complex64,
        radii: &[f64],
        extra: &[&ModalFunction],
    ) -> Result<Self, LabError> {
        if v.domain().kind() != domain.kind() {
            return Err(LabError::DomainMismatch);
        }
        for f in v
            .left_factors()
            .iter()
            .chain(v.right_factors())
            .chain(extra.iter().copied())
        {
            f.check_domain(domain)?;
        }
        let mut sources: Vec<&ModalFunction> = v.left_factors().iter().collect();
        sources.extend_from_slice(extra);
        let tests: Vec<&ModalFunction> = v.right_factors().iter().collect();
        let modes = domain.modes();
        let shots = parallel::map_slice(&modes, |&n| {
            shoot_mode(domain, n, z, &sources, &tests, radii)
        });
        let shots = shots
            .into_iter()
            .collect::<Result<Vec<_>, GeometryError>>()?;
        Ok(Self {
            domain: domain.clone(),
            z,
            couplings: v.couplings().to_vec(),
            n_sources: sources.len(),
            radii: radii.to_vec(),
            modes,
            shots,
        })
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }

    pub fn rank(&self) -> usize {
        self.couplings.len()
    }

    pub fn domain(&self) -> &ModalDomain {
        &self.domain
    }

    pub fn modes(&self) -> &[i32] {
        &self.modes
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Refuses `z` near a free eigenvalue for `bc` in any domain mode.
    pub fn check_free(&self, bc: BoundaryCondition) -> Result<(), GeometryError> {
        for (&n, shot) in self.modes.iter().zip(&self.shots) {
            crate::geometry::wronskian_norm(n, bc, self.z, shot.p1, shot.dp1)?;
        }
        Ok(())
    }

    /// `(p_n(1), p_n'(1))` per domain mode.
    pub fn regular_boundary(&self) -> Vec<(Complex64, Complex64)> {
        self.shots.iter().map(|s| (s.p1, s.dp1)).collect()
    }

    /// Free DtN (`-p'(1)/p(1)`) or NtD (`p(1)/p'(1)`) eigenvalues per mode.
    pub fn free_boundary_map(&self, bc: BoundaryCondition) -> Vec<Complex64> {
        self.shots
            .iter()
            .map(|s| match bc {
                BoundaryCondition::Dirichlet => -s.dp1 / s.p1,
                BoundaryCondition::Neumann => s.p1 / s.dp1,
            })
            .collect()
    }

    /// `<phi_j, p_n e^{i n theta}>` for domain mode index `m`.
    pub fn regular_pairing(&self, j: usize, m: usize) -> Complex64 {
        self.shots[m].pair_regular[j] * self.domain.angular_measure()
    }

    /// `S_jk = <phi_j, G_0^{bc} s_k>` for every source `k`.
    pub fn green_pairing(&self, bc: BoundaryCondition) -> Result<Vec<Vec<Complex64>>, LabError> {
        self.check_free(bc)?;
        let ang = self.domain.angular_measure();
        let mut s = vec![vec![zero(); self.n_sources]; self.rank()];
        for shot in &self.shots {
            for k in 0..self.n_sources {
                let alpha = shot.boundary_coefficient(bc, k);
                for (j, row) in s.iter_mut().enumerate() {
                    row[k] += (shot.pair_particular[j][k] + alpha * shot.pair_regular[j]) * ang;
                }
            }
        }
        Ok(s)
    }

    /// `M_jk = kappa_k <phi_j, G_0^{bc} psi_k>`, the Birman–Schwinger
    /// operator `u G_0^{bc} v` compressed to `C^r`.
    pub fn bs_matrix(&self, bc: BoundaryCondition) -> Result<OperatorMatrix, LabError> {
        let s = self.green_pairing(bc)?;
        Ok(OperatorMatrix::from_fn(self.rank(), self.rank(), |j, k| {
            s[j][k] * self.couplings[k]
        }))
    }

    /// `det(I + u G_0^{bc} v) = det(I_r + M)`.
    pub fn bs_det(&self, bc: BoundaryCondition) -> Result<Complex64, LabError> {
        let m = self.bs_matrix(bc)?;
        Ok(crate::numerics::det_i_plus(&m)?.value)
    }

    /// `Y = (I_r + M)^{-1} S` with `S` over all sources.
    fn woodbury(&self, bc: BoundaryCondition) -> Result<Vec<Vec<Complex64>>, LabError> {
        let s = self.green_pairing(bc)?;
        let r = self.rank();
        let m = OperatorMatrix::from_fn(r, r, |j, k| s[j][k] * self.couplings[k]);
        let lu = Lu::new(&m.plus_identity())?;
        let d = lu.determinant();
        if d.singular || d.value.norm() < PERTURBED_EIGENVALUE_THRESHOLD {
            return Err(LabError::PerturbedEigenvalue {
                z: self.z,
                bc,
                modulus: d.value.norm(),
            });
        }
        let mut y = vec![vec![zero(); self.n_sources]; r];
        for k in 0..self.n_sources {
            let col: Vec<Complex64> = (0..r).map(|j| s[j][k]).collect();
            let sol = lu.solve(&col)?;
            for j in 0..r {
                y[j][k] = sol[j];
            }
        }
        Ok(y)
    }

    /// `(H^{bc} - z)^{-1} s_k = G_0 s_k - sum_l kappa_l Y_lk G_0 psi_l`, on
    /// the radii with its boundary value and derivative per mode.
    pub fn perturbed_resolvent(
        &self,
        bc: BoundaryCondition,
        k: usize,
    ) -> Result<SolutionField, LabError> {
        let y = self.woodbury(bc)?;
        let mut coeff = vec![zero(); self.n_sources];
        coeff[k] = Complex64::new(1.0, 0.0);
        for l in 0..self.rank() {
            coeff[l] -= self.couplings[l] * y[l][k];
        }
        Ok(self.free_resolvent_combination(bc, &coeff))
    }

    /// `sum_k c_k G_0^{bc} s_k`.
    fn free_resolvent_combination(
        &self,
        bc: BoundaryCondition,
        coeff: &[Complex64],
    ) -> SolutionField {
        let mut field = ModalField::zeros(self.modes.clone(), self.radii.clone());
        let mut values = vec![zero(); self.modes.len()];
        let mut derivatives = vec![zero(); self.modes.len()];
        for (m, shot) in self.shots.iter().enumerate() {
            for (k, &c) in coeff.iter().enumerate() {
                if c == zero() {
                    continue;
                }
                let alpha = shot.boundary_coefficient(bc, k);
                for (a, out) in field.values[m].iter_mut().enumerate() {
                    *out += c * (shot.up[k][a] + alpha * shot.p[a]);
                }
                values[m] += c * (shot.up1[k] + alpha * shot.p1);
                derivatives[m] += c * (shot.dup1[k] + alpha * shot.dp1);
            }
        }
        SolutionField {
            field,
            boundary_values: values,
            boundary_derivatives: derivatives,
        }
    }

    /// Boundary data of `(H^D - z)^{-1} psi_k` (derivative) or
    /// `(H^N - z)^{-1} psi_k` (value), per mode, for every `k < r`.
    pub fn perturbed_traces(&self, bc: BoundaryCondition) -> Result<Vec<Vec<Complex64>>, LabError> {
        let y = self.woodbury(bc)?;
        let r = self.rank();
        let mut out = vec![vec![zero(); self.modes.len()]; r];
        for (m, shot) in self.shots.iter().enumerate() {
            let free: Vec<Complex64> = (0..r)
                .map(|k| {
                    let alpha = shot.boundary_coefficient(bc, k);
                    match bc {
                        BoundaryCondition::Dirichlet => shot.dup1[k] + alpha * shot.dp1,
                        BoundaryCondition::Neumann => shot.up1[k] + alpha * shot.p1,
                    }
                })
                .collect();
            for k in 0..r {
                let mut acc = free[k];
                for l in 0..r {
                    acc -= self.couplings[l] * y[l][k] * free[l];
                }
                out[k][m] = acc;
            }
        }
        Ok(out)
    }

    /// Solution of `(-Delta + V - z) u = 0` with boundary data `data` (per
    /// domain mode): `u = u_0 - (H^{bc} - z)^{-1} V u_0`.
    pub fn solve_bvp(
        &self,
        bc: BoundaryCondition,
        data: &[Complex64],
    ) -> Result<SolutionField, LabError> {
        self.check_free(bc)?;
        let y = self.woodbury(bc)?;
        let r = self.rank();
        // u_0 in mode n is data_n p_n / p_n(1) or data_n p_n / p_n'(1)
        let scale: Vec<Complex64> = self
            .shots
            .iter()
            .zip(data)
            .map(|(s, d)| match bc {
                BoundaryCondition::Dirichlet => d / s.p1,
                BoundaryCondition::Neumann => d / s.dp1,
            })
            .collect();
        let ang = self.domain.angular_measure();
        let pairing: Vec<Complex64> = (0..r)
            .map(|j| {
                self.shots
                    .iter()
                    .zip(&scale)
                    .map(|(s, c)| s.pair_regular[j] * c * ang)
                    .sum()
            })
            .collect();
        // V u_0 = sum_k kappa_k <phi_k, u_0> psi_k, then the resolvent through Y
        let mut coeff = vec![zero(); self.n_sources];
        for k in 0..r {
            let ck = self.couplings[k] * pairing[k];
            coeff[k] -= ck;
            for l in 0..r {
                coeff[l] += self.couplings[l] * y[l][k] * ck;
            }
        }
        let mut sol = self.free_resolvent_combination(bc, &coeff);
        for (m, shot) in self.shots.iter().enumerate() {
            for (out, p) in sol.field.values[m].iter_mut().zip(&shot.p) {
                *out += p * scale[m];
            }
            sol.boundary_values[m] += shot.p1 * scale[m];
            sol.boundary_derivatives[m] += shot.dp1 * scale[m];
        }
        Ok(sol)
    }
}
