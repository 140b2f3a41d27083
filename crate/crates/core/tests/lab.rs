use fredlab_core::geometry::{ModalDomain, ModalFunction, ModeProfile};
use fredlab_core::halfline::BoundaryCondition;
use fredlab_core::lab::*;
use fredlab_core::numerics::{gauss_interval, OperatorMatrix};
use fredlab_core::potential::{make_potential, FiniteRankPotential};
use fredlab_core::Complex64;

const DIR: BoundaryCondition = BoundaryCondition::Dirichlet;
const NEU: BoundaryCondition = BoundaryCondition::Neumann;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const CHAIN_POINTS: [(f64, f64); 3] = [(-1.0, 0.0), (-2.0, 0.0), (-1.0, 1.0)];

fn disk() -> ModalDomain {
    ModalDomain::disk(8, 48, 17).unwrap()
}

fn ball() -> ModalDomain {
    ModalDomain::ball_radial(48).unwrap()
}

fn disk_rank_two(domain: &ModalDomain) -> FiniteRankPotential {
    let psi1 = ModalFunction::single(0, 1.0, vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
    let phi1 = ModalFunction::single(0, 1.5, vec![c(1.0, 0.0)]).unwrap();
    let psi2 = ModalFunction::new(vec![
        ModeProfile::new(1, 1.0, vec![c(1.0, 0.0)]),
        ModeProfile::new(-2, 0.5, vec![c(0.3, 0.2)]),
    ])
    .unwrap();
    let phi2 = ModalFunction::new(vec![
        ModeProfile::new(1, 2.0, vec![c(1.0, 0.0), c(0.0, 1.0)]),
        ModeProfile::new(-2, 1.0, vec![c(1.0, 0.0)]),
    ])
    .unwrap();
    make_potential(
        vec![c(3.0, 0.0), c(-2.0, 1.0)],
        vec![psi1, psi2],
        vec![phi1, phi2],
        domain,
    )
    .unwrap()
}

fn ball_rank_one(domain: &ModalDomain, kappa: Complex64) -> FiniteRankPotential {
    let psi = ModalFunction::single(0, 1.0, vec![c(1.0, 0.0), c(0.5, 0.0)]).unwrap();
    let phi = ModalFunction::single(0, 1.5, vec![c(1.0, 0.0)]).unwrap();
    make_potential(vec![kappa], vec![psi], vec![phi], domain).unwrap()
}

fn disk_self_adjoint(domain: &ModalDomain) -> FiniteRankPotential {
    let f1 = ModalFunction::single(0, 1.0, vec![c(1.0, 0.0), c(0.0, 0.0), c(-0.4, 0.0)]).unwrap();
    let f2 = ModalFunction::new(vec![
        ModeProfile::new(2, 1.0, vec![c(1.0, 0.0)]),
        ModeProfile::new(-1, 0.5, vec![c(0.0, 0.6)]),
    ])
    .unwrap();
    make_potential(
        vec![c(2.5, 0.0), c(-1.5, 0.0)],
        vec![f1.clone(), f2.clone()],
        vec![f1, f2],
        domain,
    )
    .unwrap()
}

/// `det(1 + kappa <phi, G_0 psi>)` on the ball at `z = -1` from the closed
/// form radial kernels `p(r<) q(r>) / C` with `p = sinh r / r` and
/// `q = sinh(1 - r) / r`, `C = sinh 1` (Dirichlet) or `q = e^{r - 1} / r`,
/// `C = e^{-1}` (Neumann), by nested Gauss quadrature.
fn ball_oracle(bc: BoundaryCondition, kappa: Complex64) -> Complex64 {
    let psi = |r: f64| (-r * r).exp() * (1.0 + 0.5 * r);
    let phi = |r: f64| (-1.5 * r * r).exp();
    let p = |r: f64| if r == 0.0 { 1.0 } else { r.sinh() / r };
    let (q, cst): (Box<dyn Fn(f64) -> f64>, f64) = match bc {
        DIR => (Box::new(|r: f64| (1.0 - r).sinh() / r), 1f64.sinh()),
        NEU => (Box::new(|r: f64| (r - 1.0).exp() / r), (-1f64).exp()),
    };
    let n = 40;
    let outer = gauss_interval(n, 0.0, 1.0).unwrap();
    let mut s = 0.0;
    for (r, w) in outer.abscissae().into_iter().zip(outer.weights()) {
        let lo = gauss_interval(n, 0.0, r).unwrap();
        let hi = gauss_interval(n, r, 1.0).unwrap();
        let below: f64 = lo
            .abscissae()
            .iter()
            .zip(lo.weights())
            .map(|(&x, v)| p(x) * psi(x) * x * x * v)
            .sum();
        let above: f64 = hi
            .abscissae()
            .iter()
            .zip(hi.weights())
            .map(|(&x, v)| q(x) * psi(x) * x * x * v)
            .sum();
        let u = (q(r) * below + p(r) * above) / cst;
        s += phi(r) * u * r * r * w;
    }
    1.0 + kappa * (4.0 * std::f64::consts::PI * s)
}

#[test]
fn zero_potential_is_trivial() {
    let domain = disk();
    let zero = FiniteRankPotential::zero(&domain).unwrap();
    assert!(zero.is_zero());
    for bc in [DIR, NEU] {
        assert!((bs_det_interior(&domain, bc, &zero, c(-1.0, 0.5)).unwrap() - 1.0).norm() < 1e-15);
    }
    let report = verify_dirichlet_chain(&domain, &zero, c(-1.0, 0.5)).unwrap();
    for q in &report.quantities {
        assert!((q.value - 1.0).norm() < 1e-14, "{}", q.name);
    }
    let op = dirichlet_boundary_operator(&domain, &zero, c(-1.0, 0.5)).unwrap();
    assert_eq!(op.numerical_rank(), 0);
}

#[test]
fn rank_one_ball_matches_closed_form_kernel() {
    let domain = ball();
    let kappa = c(2.0, 1.0);
    let v = ball_rank_one(&domain, kappa);
    for bc in [DIR, NEU] {
        let got = bs_det_interior(&domain, bc, &v, c(-1.0, 0.0)).unwrap();
        let expected = ball_oracle(bc, kappa);
        assert!(
            (got - expected).norm() < 1e-10,
            "{bc:?}: {got} vs {expected}"
        );
    }
}

#[test]
fn second_resolvent_identity() {
    let domain = disk();
    let v = disk_rank_two(&domain);
    let zero = FiniteRankPotential::zero(&domain).unwrap();
    let f = ModalFunction::new(vec![
        ModeProfile::new(0, 0.5, vec![c(1.0, 0.0), c(0.0, -0.3)]),
        ModeProfile::new(1, 1.0, vec![c(0.0, 1.0)]),
        ModeProfile::new(-2, 0.0, vec![c(0.4, 0.0)]),
    ])
    .unwrap();
    let z = c(-1.0, 0.7);
    for bc in [DIR, NEU] {
        let rf = perturbed_resolvent_apply(&domain, bc, &v, z, &f).unwrap();
        let r0f = perturbed_resolvent_apply(&domain, bc, &zero, z, &f).unwrap();
        // R f = R_0 f - R_0 V R f, with V R f = sum_j kappa_j <phi_j, R f> psi_j
        let mut rhs = r0f.clone();
        for (j, psi) in v.left_factors().iter().enumerate() {
            let coeff = v.couplings()[j]
                * domain.field_inner(&v.right_factors()[j].sample(&domain, &domain.radii()), &rf);
            let r0psi = perturbed_resolvent_apply(&domain, bc, &zero, z, psi).unwrap();
            for (o, x) in rhs
                .values
                .iter_mut()
                .flatten()
                .zip(r0psi.values.iter().flatten())
            {
                *o -= coeff * x;
            }
        }
        assert!(
            rf.max_abs_difference(&rhs) < 1e-9 * rf.max_abs().max(1.0),
            "{bc:?}"
        );
    }
}

#[test]
fn perturbed_eigenvalue_is_flagged() {
    let domain = ball();
    let z = c(-1.0, 0.0);
    let unit = ball_rank_one(&domain, c(1.0, 0.0));
    let m = ModalReduction::new(&domain, &unit, z, &[])
        .unwrap()
        .bs_matrix(DIR)
        .unwrap();
    let kappa = -1.0 / m[(0, 0)];
    let v = ball_rank_one(&domain, kappa);
    assert!(bs_det_interior(&domain, DIR, &v, z).unwrap().norm() < 1e-12);
    let f = ModalFunction::single(0, 0.0, vec![c(1.0, 0.0)]).unwrap();
    let err = perturbed_resolvent_apply(&domain, DIR, &v, z, &f).unwrap_err();
    assert!(err.is_eigenvalue_flag(), "{err}");
    let report = verify_dirichlet_chain(&domain, &v, z).unwrap();
    assert!(report.is_excluded());
    assert!(report.residuals.is_empty());
}

#[test]
fn boundary_operator_rank_and_reduced_determinant() {
    let domain = disk();
    let v = disk_rank_two(&domain);
    for &(re, im) in &CHAIN_POINTS {
        let op = dirichlet_boundary_operator(&domain, &v, c(re, im)).unwrap();
        assert_eq!(op.rank_bound, 2);
        assert!(op.numerical_rank() <= 2);
        let grid = op.det_identity_minus().unwrap();
        let reduced = op.reduced_det_identity_minus().unwrap();
        let modal = op.modal_det_identity_minus().unwrap();
        assert!((grid - reduced).norm() < 1e-12 * grid.norm().max(1.0));
        assert!((grid - modal).norm() < 1e-12 * grid.norm().max(1.0));
        let pair = dtn_perturbed(&domain, &v, c(re, im)).unwrap();
        assert!(pair.difference.numerical_rank() <= 2);
        assert!(pair.reconciliation_residual < 1e-9);
    }
}

#[test]
fn boundary_operator_only_couples_potential_modes() {
    let domain = disk();
    let f = ModalFunction::single(2, 1.0, vec![c(1.0, 0.0), c(0.3, -0.2)]).unwrap();
    let g = ModalFunction::single(2, 0.5, vec![c(1.0, 0.0)]).unwrap();
    let v = make_potential(vec![c(1.5, 0.5)], vec![f], vec![g], &domain).unwrap();
    let op = dirichlet_boundary_operator(&domain, &v, c(-1.0, 0.3)).unwrap();
    let modes = domain.modes();
    let m2 = domain.mode_index(2).unwrap();
    assert!(op.modal[(m2, m2)].norm() > 1e-3);
    for m in 0..modes.len() {
        for n in 0..modes.len() {
            if (m, n) != (m2, m2) {
                assert!(
                    op.modal[(m, n)].norm() < 1e-13,
                    "({}, {})",
                    modes[m],
                    modes[n]
                );
            }
        }
    }
}

#[test]
fn chains_agree_on_disk_and_ball() {
    let cases = [
        (disk(), disk_rank_two(&disk())),
        (ball(), ball_rank_one(&ball(), c(2.0, 1.0))),
    ];
    for (domain, v) in &cases {
        for &(re, im) in &CHAIN_POINTS {
            let z = c(re, im);
            let d = verify_dirichlet_chain(domain, v, z).unwrap();
            let n = verify_neumann_chain(domain, v, z).unwrap();
            assert!(!d.is_excluded() && !n.is_excluded());
            assert_eq!(d.residuals.len(), 3);
            assert!(d.max_residual() < 1e-8, "{:?}", d.residuals);
            assert!(n.max_residual() < 1e-8, "{:?}", n.residuals);
            let product = d.quantity("boundary_det").unwrap() * n.quantity("boundary_det").unwrap();
            assert!((product - 1.0).norm() < 1e-8, "{product}");
        }
    }
}

#[test]
fn self_adjoint_determinants_respect_conjugation() {
    let domain = disk();
    let v = disk_self_adjoint(&domain);
    assert!(v.is_self_adjoint());
    for z in [c(-1.0, 1.0), c(2.0, 0.5), c(-3.0, -2.0)] {
        for bc in [DIR, NEU] {
            let a = bs_det_interior(&domain, bc, &v, z).unwrap();
            let b = bs_det_interior(&domain, bc, &v, z.conj()).unwrap();
            assert!((a.conj() - b).norm() < 1e-9 * a.norm().max(1.0));
        }
        let d = verify_dirichlet_chain(&domain, &v, z).unwrap();
        let dc = verify_dirichlet_chain(&domain, &v, z.conj()).unwrap();
        for (x, y) in d.quantities.iter().zip(&dc.quantities) {
            assert!(
                (x.value.conj() - y.value).norm() < 1e-9 * x.value.norm().max(1.0),
                "{}",
                x.name
            );
        }
    }
}

#[test]
fn literal_full_grid_matches_reduced_nystrom() {
    let domain = disk();
    let v = disk_rank_two(&domain);
    for rule in [NystromRule::Plain, NystromRule::Subtracted] {
        for bc in [DIR, NEU] {
            let reduced = nystrom_bs_det(&v, bc, c(-1.0, 1.0), 10, 9, rule).unwrap();
            let literal = nystrom_full_grid_det(&v, bc, c(-1.0, 1.0), 10, 9, rule).unwrap();
            assert!(
                (reduced - literal).norm() < 1e-12 * reduced.norm().max(1.0),
                "{rule:?} {bc:?}"
            );
        }
    }
    let b = ball();
    let v = ball_rank_one(&b, c(2.0, 1.0));
    let reduced = nystrom_bs_det(&v, DIR, c(-1.0, 0.0), 12, 1, NystromRule::Plain).unwrap();
    let literal = nystrom_full_grid_det(&v, DIR, c(-1.0, 0.0), 12, 1, NystromRule::Plain).unwrap();
    assert!((reduced - literal).norm() < 1e-12);
}

#[test]
fn nystrom_rules_converge_at_their_orders() {
    let domain = disk();
    let v = disk_rank_two(&domain);
    let z = c(-2.0, 0.0);
    let exact = bs_det_interior(&domain, DIR, &v, z).unwrap();
    let err = |n: usize, rule| (nystrom_bs_det(&v, DIR, z, n, 9, rule).unwrap() - exact).norm();
    let (p1, p2) = (err(16, NystromRule::Plain), err(32, NystromRule::Plain));
    assert!((3.0..5.0).contains(&(p1 / p2)), "plain ratio {}", p1 / p2);
    let (s1, s2) = (
        err(16, NystromRule::Subtracted),
        err(32, NystromRule::Subtracted),
    );
    assert!(
        s1 < p1 && s2 < p2 && s1 / s2 > 6.0,
        "subtracted {s1:.2e} {s2:.2e}"
    );
}

#[test]
fn determinant_swap_statistics() {
    let config = SwapConfig::default();
    let stats = det_swap_property(&config).unwrap();
    assert_eq!(stats.trials, 200);
    assert!(stats.max_deviation <= 1e-10, "{stats:?}");
    assert!(stats.mean_deviation <= stats.max_deviation);
    assert_eq!(stats, det_swap_property(&config).unwrap());
    let other = det_swap_property(&SwapConfig { seed: 9, ..config }).unwrap();
    assert_ne!(stats.mean_deviation, other.mean_deviation);
    assert!(det_swap_property(&SwapConfig {
        trials: 0,
        ..config
    })
    .is_err());

    // rank-one case by hand: det(I - a b^T) = 1 - b . a
    let a = OperatorMatrix::from_fn(3, 1, |i, _| c(i as f64 + 1.0, 0.5));
    let b = OperatorMatrix::from_fn(1, 3, |_, j| c(0.1, -(j as f64)));
    let (big, small) = det_swap_pair(&a, &b).unwrap();
    let dot: Complex64 = (0..3).map(|i| a[(i, 0)] * b[(0, i)]).sum();
    assert!((big - (1.0 - dot)).norm() < 1e-13);
    assert!((small - (1.0 - dot)).norm() < 1e-14);
}
