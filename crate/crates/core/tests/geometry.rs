use std::f64::consts::PI;

use fredlab_core::geometry::*;
use fredlab_core::halfline::BoundaryCondition;
use fredlab_core::lab::ModalReduction;
use fredlab_core::numerics::{bessel_j, bessel_j_derivative, principal_sqrt, Node};
use fredlab_core::potential::{make_potential, FiniteRankPotential};
use fredlab_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const TEST_POINTS: [(f64, f64); 6] = [
    (-1.0, 0.0),
    (-2.0, 0.5),
    (1.0, 2.0),
    (-0.5, -1.5),
    (3.0, 0.8),
    (-4.0, -0.3),
];

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[test]
fn disk_regular_branch_is_bessel() {
    let domain = ModalDomain::disk(8, 24, 17).unwrap();
    for &(re, im) in &TEST_POINTS {
        let z = c(re, im);
        let k = principal_sqrt(z);
        for n in [0i32, 1, 3, 7, -2] {
            let pair = radial_solutions(&domain, n, BoundaryCondition::Dirichlet, z).unwrap();
            let m = n.unsigned_abs();
            // p ~ r^m normalizes J_m(k r) by m! (2/k)^m
            let scale = factorial(m) * (c(2.0, 0.0) / k).powu(m);
            for (r, p) in pair.radii.iter().zip(&pair.regular) {
                let j = bessel_j(m, k * r).unwrap() * scale;
                assert!(
                    (p - j).norm() <= 1e-9 * j.norm(),
                    "n={n} z={z} r={r}: {p} vs {j}"
                );
            }
        }
    }
}

#[test]
fn ball_regular_branch_is_spherical() {
    let domain = ModalDomain::ball_radial(20).unwrap();
    for &(re, im) in &TEST_POINTS {
        let z = c(re, im);
        let k = principal_sqrt(z);
        let pair = radial_solutions(&domain, 0, BoundaryCondition::Neumann, z).unwrap();
        for (r, p) in pair.radii.iter().zip(&pair.regular) {
            let s = (k * r).sin() / (k * r);
            assert!((p - s).norm() <= 1e-10 * s.norm(), "z={z} r={r}");
        }
    }
}

#[test]
fn regular_branch_vanishes_like_power() {
    let domain = ModalDomain::disk(12, 64, 25).unwrap();
    for n in [0i32, 1, 5, 12] {
        let pair =
            radial_solutions(&domain, n, BoundaryCondition::Dirichlet, c(-2.0, 0.5)).unwrap();
        let (r0, r1) = (pair.radii[0], pair.radii[1]);
        let ratio = (pair.regular[1] / pair.regular[0]).norm();
        let expected = (r1 / r0).powi(n.abs());
        assert!((ratio / expected - 1.0).abs() < 0.05, "n={n}");
    }
}

#[test]
fn matched_branch_satisfies_boundary_condition_and_wronskian() {
    let domain = ModalDomain::disk(6, 16, 13).unwrap();
    let radii = [0.1, 0.35, 0.7, 1.0];
    for &(re, im) in &TEST_POINTS {
        let z = c(re, im);
        for n in [0, 2, 6] {
            for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
                let pair = radial_solutions_at(&domain, n, bc, z, &radii).unwrap();
                match bc {
                    BoundaryCondition::Dirichlet => assert!(pair.matched[3].norm() < 1e-10),
                    BoundaryCondition::Neumann => {
                        assert!(pair.matched_derivative[3].norm() < 1e-10)
                    }
                }
                for i in 0..radii.len() {
                    let w = (pair.regular[i] * pair.matched_derivative[i]
                        - pair.regular_derivative[i] * pair.matched[i])
                        * radii[i];
                    assert!(
                        (w - pair.wronskian_norm).norm()
                            < 1e-9 * pair.wronskian_norm.norm().max(1.0)
                    );
                }
            }
        }
    }
}

#[test]
fn dtn_limits_and_closed_forms() {
    let disk = ModalDomain::disk(4, 8, 9).unwrap();
    let l3 = free_dtn_mode(&disk, 3, c(-1e-6, 0.0)).unwrap();
    assert!((l3 - c(-3.0, 0.0)).norm() < 1e-5, "{l3}");

    // n = 0, z = -1: -k J_0'(k) / J_0(k)
    let z = c(-1.0, 0.0);
    let k = principal_sqrt(z);
    let oracle = -k * bessel_j_derivative(0, k).unwrap() / bessel_j(0, k).unwrap();
    let l0 = free_dtn_mode(&disk, 0, z).unwrap();
    assert!((l0 - oracle).norm() < 1e-9, "{l0} vs {oracle}");
    let n0 = free_ntd_mode(&disk, 0, z).unwrap();
    assert!((n0 + 1.0 / oracle).norm() < 1e-9);

    // ball, z = -1: u = sinh r / r, u'(1) = cosh 1 - sinh 1
    let ball = ModalDomain::ball_radial(8).unwrap();
    let (s, ch) = (1f64.sinh(), 1f64.cosh());
    let lb = free_dtn_mode(&ball, 0, z).unwrap();
    assert!((lb - c(-(ch - s) / s, 0.0)).norm() < 1e-10, "{lb}");
}

#[test]
fn ntd_is_minus_inverse_dtn() {
    let disk = ModalDomain::disk(20, 8, 41).unwrap();
    let ball = ModalDomain::ball_radial(8).unwrap();
    for &(re, im) in &TEST_POINTS {
        let z = c(re, im);
        for n in -20..=20 {
            let d = free_dtn_mode(&disk, n, z).unwrap();
            let nn = free_ntd_mode(&disk, n, z).unwrap();
            assert!(
                (nn + 1.0 / d).norm() <= 1e-10 * nn.norm().max(1.0),
                "n={n} z={z}"
            );
        }
        let d = free_dtn_mode(&ball, 0, z).unwrap();
        let nn = free_ntd_mode(&ball, 0, z).unwrap();
        assert!((nn + 1.0 / d).norm() <= 1e-10 * nn.norm().max(1.0));
    }
}

#[test]
fn dirichlet_eigenvalue_is_flagged() {
    // first zero of J_0: 2.404825557695773
    let j01: f64 = 2.404_825_557_695_773;
    let disk = ModalDomain::disk(2, 8, 5).unwrap();
    let err = free_dtn_mode(&disk, 0, c(j01 * j01, 0.0)).unwrap_err();
    assert!(
        matches!(err, GeometryError::EigenvalueProximity { mode: 0, .. }),
        "{err}"
    );
    assert!(free_ntd_mode(&disk, 0, c(j01 * j01, 0.0)).is_ok());
}

#[test]
fn green_kernel_symmetry_and_boundary_condition() {
    let domain = ModalDomain::disk(40, 8, 81).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let z = c(-1.0, 0.5);
    for _ in 0..100 {
        let x = Node::Polar {
            r: rng.gen_range(0.05..0.95),
            theta: rng.gen_range(0.0..2.0 * PI),
        };
        let y = Node::Polar {
            r: rng.gen_range(0.05..0.95),
            theta: rng.gen_range(0.0..2.0 * PI),
        };
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            let a = green_kernel(&domain, bc, z, x, y).unwrap().value;
            let b = green_kernel(&domain, bc, z, y, x).unwrap().value;
            assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
        }
    }
    for theta in [0.0, 1.0, 2.5] {
        let edge = Node::Polar {
            r: 1.0 - 1e-6,
            theta,
        };
        let inner = Node::Polar { r: 0.4, theta: 0.3 };
        let g = green_kernel(&domain, BoundaryCondition::Dirichlet, z, edge, inner).unwrap();
        assert!(g.value.norm() <= 1e-5);
    }
    let p = Node::Polar { r: 0.5, theta: 0.2 };
    assert_eq!(
        green_kernel(&domain, BoundaryCondition::Dirichlet, z, p, p),
        Err(GeometryError::Diagonal)
    );
    // two nearby points need many modes
    let q = Node::Polar {
        r: 0.5,
        theta: 0.21,
    };
    let g = green_kernel(&domain, BoundaryCondition::Dirichlet, z, p, q).unwrap();
    assert!(g.truncated);
}

/// Point-source solve of `(-Delta - z) u = delta_{x'}` by second-order
/// differences on a cell-centred polar grid with `u(1) = 0`: DFT in the
/// angle (exact for the circulant difference), tridiagonal in `r`.
fn fd_point_source(z: Complex64, nr: usize, nt: usize, source_cell: usize) -> Vec<Vec<Complex64>> {
    let dr = 1.0 / nr as f64;
    let dt = 2.0 * PI / nt as f64;
    let r: Vec<f64> = (0..nr).map(|i| (i as f64 + 0.5) * dr).collect();
    let mut u = vec![vec![c(0.0, 0.0); nt]; nr];
    for m in 0..nt {
        let n = if m <= nt / 2 {
            m as f64
        } else {
            m as f64 - nt as f64
        };
        let lam = (2.0 - 2.0 * (n * dt).cos()) / (dt * dt);
        let mut lower = vec![c(0.0, 0.0); nr];
        let mut diag = vec![c(0.0, 0.0); nr];
        let mut upper = vec![c(0.0, 0.0); nr];
        let mut rhs = vec![c(0.0, 0.0); nr];
        for i in 0..nr {
            let (rm, rp) = (r[i] - 0.5 * dr, r[i] + 0.5 * dr);
            let s = 1.0 / (r[i] * dr * dr);
            diag[i] = c((rm + rp) * s + lam / (r[i] * r[i]), 0.0) - z;
            if i > 0 {
                lower[i] = c(-rm * s, 0.0);
            }
            if i + 1 < nr {
                upper[i] = c(-rp * s, 0.0);
            } else {
                // ghost value -u_i puts the zero at r = 1
                diag[i] += c(rp * s, 0.0);
            }
        }
        // delta of mass one in the cell: each angular frequency gets 1 / (2 pi r dr)
        rhs[source_cell] = c(1.0 / (2.0 * PI * r[source_cell] * dr), 0.0);
        for i in 1..nr {
            let f = lower[i] / diag[i - 1];
            diag[i] = diag[i] - f * upper[i - 1];
            rhs[i] = rhs[i] - f * rhs[i - 1];
        }
        let mut sol = vec![c(0.0, 0.0); nr];
        sol[nr - 1] = rhs[nr - 1] / diag[nr - 1];
        for i in (0..nr - 1).rev() {
            sol[i] = (rhs[i] - upper[i] * sol[i + 1]) / diag[i];
        }
        for (i, s) in sol.iter().enumerate() {
            for (l, out) in u[i].iter_mut().enumerate() {
                *out += s * Complex64::from_polar(1.0, n * dt * l as f64);
            }
        }
    }
    u
}

#[test]
fn green_kernel_matches_finite_difference_resolvent() {
    // cell centres of the 80 grid are cell centres of the 240 grid
    let z = c(-1.0, 0.0);
    let coarse = fd_point_source(z, 80, 80, 39);
    let fine = fd_point_source(z, 240, 240, 118);
    let rs = 39.5 / 80.0;
    let domain = ModalDomain::disk(60, 8, 121).unwrap();
    let x0 = Node::Polar { r: rs, theta: 0.0 };
    let (mut worst_coarse, mut worst_fine, mut worst_extrapolated): (f64, f64, f64) =
        (0.0, 0.0, 0.0);
    let mut scale: f64 = 0.0;
    for i in (4..78).step_by(5) {
        for l in (0..80).step_by(8) {
            let r = (i as f64 + 0.5) / 80.0;
            let theta = 2.0 * PI * l as f64 / 80.0;
            // on the source circle the modal series converges only like 1/n
            if (r - rs).abs() < 0.15 {
                continue;
            }
            let g = green_kernel(
                &domain,
                BoundaryCondition::Dirichlet,
                z,
                Node::Polar { r, theta },
                x0,
            )
            .unwrap()
            .value;
            let (uc, uf) = (coarse[i][l], fine[3 * i + 1][3 * l]);
            worst_coarse = worst_coarse.max((g - uc).norm());
            worst_fine = worst_fine.max((g - uf).norm());
            worst_extrapolated = worst_extrapolated.max((g - (uf * 9.0 - uc) / 8.0).norm());
            scale = scale.max(g.norm());
        }
    }
    assert!(
        worst_fine <= 1e-3 * scale,
        "{worst_fine:.3e} vs scale {scale:.3e}"
    );
    // second-order differences: the error falls by about 9
    assert!(worst_coarse / worst_fine > 6.0);
    assert!(worst_extrapolated <= 0.2 * worst_fine);
}

#[test]
fn trace_kernels_reproduce_modal_factors() {
    let domain = ModalDomain::disk(6, 20, 16).unwrap();
    for &(re, im) in &TEST_POINTS[..3] {
        let z = c(re, im);
        let (a_d, b_n) = boundary_trace_kernels(&domain, z).unwrap();
        let interior = polar_grid(&domain).unwrap();
        let boundary = domain.boundary_grid();
        assert_eq!((a_d.rows(), a_d.cols()), (16, 20 * 16));
        assert_eq!((b_n.rows(), b_n.cols()), (20 * 16, 16));

        // B_N e^{i n theta} = p_n(r) e^{i n theta} / p_n'(1)
        let radii = domain.radii();
        for n in [0, 2, -3] {
            let pair = radial_solutions(&domain, n, BoundaryCondition::Neumann, z).unwrap();
            let (p1, dp1) = {
                let at_one =
                    radial_solutions_at(&domain, n, BoundaryCondition::Neumann, z, &[1.0]).unwrap();
                (at_one.regular[0], at_one.regular_derivative[0])
            };
            let _ = p1;
            let g: Vec<Complex64> = boundary
                .nodes()
                .iter()
                .zip(boundary.weights())
                .map(|(x, w)| match x {
                    Node::Polar { theta, .. } => Complex64::from_polar(w.sqrt(), n as f64 * theta),
                    Node::Line(_) => unreachable!(),
                })
                .collect();
            let out = b_n.matvec(&g).unwrap();
            for (i, (x, w)) in interior.nodes().iter().zip(interior.weights()).enumerate() {
                let Node::Polar { r, theta } = *x else {
                    unreachable!()
                };
                let a = radii.iter().position(|&s| s == r).unwrap();
                let expected = pair.regular[a] / dp1 * Complex64::from_polar(1.0, n as f64 * theta);
                assert!((out[i] / w.sqrt() - expected).norm() < 1e-9 * expected.norm().max(1.0));
            }
        }

        // A_D f = d_r (G_0^D f)(1) for a smooth single-mode f
        let f = ModalFunction::single(2, 1.0, vec![c(1.0, 0.0), c(0.5, -0.5)]).unwrap();
        let zero = FiniteRankPotential::zero(&domain).unwrap();
        let reduction = ModalReduction::with_sources(&domain, &zero, z, &[], &[&f]).unwrap();
        let expected = reduction
            .perturbed_resolvent(BoundaryCondition::Dirichlet, 1)
            .unwrap();
        let m2 = domain.mode_index(2).unwrap();
        let fw: Vec<Complex64> = interior
            .nodes()
            .iter()
            .zip(interior.weights())
            .map(|(x, w)| match x {
                Node::Polar { r, theta } => f.evaluate(*r, *theta) * w.sqrt(),
                Node::Line(_) => unreachable!(),
            })
            .collect();
        let out = a_d.matvec(&fw).unwrap();
        for (i, (x, w)) in boundary.nodes().iter().zip(boundary.weights()).enumerate() {
            let Node::Polar { theta, .. } = *x else {
                unreachable!()
            };
            let e = expected.boundary_derivatives[m2] * Complex64::from_polar(1.0, 2.0 * theta);
            assert!((out[i] / w.sqrt() - e).norm() < 1e-9 * e.norm().max(1.0));
        }
    }
}

#[test]
fn neumann_trace_kernel_conjugation() {
    let domain = ModalDomain::disk(4, 8, 9).unwrap();
    let (_, real) = boundary_trace_kernels(&domain, c(-1.5, 0.0)).unwrap();
    assert!(real
        .as_slice()
        .iter()
        .all(|v| v.im.abs() < 1e-14 * v.norm().max(1.0)));
    let z = c(-1.0, 2.0);
    let (_, b) = boundary_trace_kernels(&domain, z).unwrap();
    let (_, bc) = boundary_trace_kernels(&domain, z.conj()).unwrap();
    for (x, y) in b.as_slice().iter().zip(bc.as_slice()) {
        assert!((x.conj() - y).norm() < 1e-12);
    }
}

#[test]
fn helmholtz_bvp_matches_bessel_and_boundary_maps() {
    let domain = ModalDomain::disk(4, 12, 9).unwrap();
    let z = c(-1.0, 0.0);
    let radii = domain.radii();
    let sol = solve_helmholtz_bvp(
        &domain,
        BoundaryCondition::Dirichlet,
        &BoundaryData::mode(0, c(1.0, 0.0)),
        z,
        &radii,
    )
    .unwrap();
    // J_0(i r) = I_0(r)
    let i0 = bessel_j(0, c(0.0, 1.0)).unwrap();
    for (r, u) in radii.iter().zip(sol.field.mode(0).unwrap()) {
        let e = bessel_j(0, c(0.0, *r)).unwrap() / i0;
        assert!((u - e).norm() < 1e-10);
    }
    let m0 = domain.mode_index(0).unwrap();
    assert!((sol.boundary_values[m0] - c(1.0, 0.0)).norm() < 1e-10);

    let data = BoundaryData {
        coefficients: vec![(0, c(1.0, 0.0)), (2, c(0.5, -1.0)), (-3, c(0.0, 2.0))],
    };
    let zc = c(-2.0, 0.5);
    let sol = solve_helmholtz_bvp(&domain, BoundaryCondition::Dirichlet, &data, zc, &[]).unwrap();
    let vec = data.to_vector(&domain).unwrap();
    for (m, n) in domain.modes().into_iter().enumerate() {
        let lam = free_dtn_mode(&domain, n, zc).unwrap();
        assert!((-sol.boundary_derivatives[m] - lam * vec[m]).norm() < 1e-10);
        assert!((sol.boundary_values[m] - vec[m]).norm() < 1e-10);
    }

    let g = BoundaryData::mode(1, c(1.0, 0.0));
    let sol = solve_helmholtz_bvp(&domain, BoundaryCondition::Neumann, &g, zc, &[]).unwrap();
    let m1 = domain.mode_index(1).unwrap();
    let lam = free_ntd_mode(&domain, 1, zc).unwrap();
    assert!((sol.boundary_values[m1] - lam).norm() < 1e-10);
    assert!((sol.boundary_derivatives[m1] - c(1.0, 0.0)).norm() < 1e-10);
}

fn radial_bump_potential(domain: &ModalDomain, kappa: f64) -> FiniteRankPotential {
    let psi = ModalFunction::single(0, 2.0, vec![c(1.0, 0.0)]).unwrap();
    let phi = ModalFunction::single(0, 1.0, vec![c(1.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]).unwrap();
    make_potential(vec![c(kappa, 0.0)], vec![psi], vec![phi], domain).unwrap()
}

#[test]
fn schrodinger_bvp_reduces_to_helmholtz_for_zero_potential() {
    let domain = ModalDomain::disk(3, 16, 7).unwrap();
    let zero = FiniteRankPotential::zero(&domain).unwrap();
    let data = BoundaryData {
        coefficients: vec![(1, c(1.0, 0.0)), (-2, c(0.3, 0.1))],
    };
    let z = c(-0.5, 1.0);
    let radii = domain.radii();
    for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
        let a = solve_helmholtz_bvp(&domain, bc, &data, z, &radii).unwrap();
        let b = solve_schrodinger_bvp(&domain, bc, &zero, &data, z, &radii).unwrap();
        assert!(a.field.max_abs_difference(&b.field) < 1e-10);
    }
}

/// Dense second-order difference solve of the mode-0 problem
/// `-u'' - u'/r - z u + kappa psi(r) 2 pi int phi u r dr = 0`, `u(1) = 1`.
fn fd_nonlocal_radial(z: Complex64, kappa: f64, nr: usize) -> (Vec<f64>, Vec<Complex64>) {
    use fredlab_core::numerics::{Lu, OperatorMatrix};
    let dr = 1.0 / nr as f64;
    let r: Vec<f64> = (0..nr).map(|i| (i as f64 + 0.5) * dr).collect();
    let psi = |x: f64| (-2.0 * x * x).exp();
    let phi = |x: f64| (-x * x).exp() * (1.0 - 0.5 * x * x);
    let mut a = OperatorMatrix::zeros(nr, nr);
    let mut b = vec![c(0.0, 0.0); nr];
    for i in 0..nr {
        let (rm, rp) = (r[i] - 0.5 * dr, r[i] + 0.5 * dr);
        let s = 1.0 / (r[i] * dr * dr);
        a[(i, i)] = c((rm + rp) * s, 0.0) - z;
        if i > 0 {
            a[(i, i - 1)] = c(-rm * s, 0.0);
        }
        if i + 1 < nr {
            a[(i, i + 1)] = c(-rp * s, 0.0);
        } else {
            // ghost 2 - u_i puts u(1) = 1
            a[(i, i)] += c(rp * s, 0.0);
            b[i] = c(2.0 * rp * s, 0.0);
        }
        for j in 0..nr {
            a[(i, j)] += c(kappa * psi(r[i]) * 2.0 * PI * phi(r[j]) * r[j] * dr, 0.0);
        }
    }
    let u = Lu::new(&a).unwrap().solve(&b).unwrap();
    (r, u)
}

#[test]
fn schrodinger_bvp_matches_dense_difference_solve() {
    let domain = ModalDomain::disk(2, 32, 5).unwrap();
    let kappa = 3.0;
    let v = radial_bump_potential(&domain, kappa);
    let z = c(-1.0, 0.5);
    let (r, u) = fd_nonlocal_radial(z, kappa, 400);
    let probe: Vec<f64> = r.iter().copied().step_by(37).collect();
    let sol = solve_schrodinger_bvp(
        &domain,
        BoundaryCondition::Dirichlet,
        &v,
        &BoundaryData::mode(0, c(1.0, 0.0)),
        z,
        &probe,
    )
    .unwrap();
    let m0 = domain.mode_index(0).unwrap();
    for (k, x) in sol.field.values[m0].iter().enumerate() {
        assert!(
            (x - u[37 * k]).norm() < 1e-3,
            "r={} {x} vs {}",
            probe[k],
            u[37 * k]
        );
    }
    assert!((sol.boundary_values[m0] - c(1.0, 0.0)).norm() < 1e-9);
}

#[test]
fn schrodinger_bvp_residual_is_small() {
    // (-Delta + V - z) u = 0 checked by differences on a fine radial grid
    let domain = ModalDomain::disk(2, 48, 5).unwrap();
    let v = radial_bump_potential(&domain, -2.0);
    let z = c(-0.5, 0.3);
    let data = BoundaryData::mode(0, c(1.0, 0.0));
    let h = 1e-3;
    let centres = [0.2, 0.45, 0.8];
    let mut radii = Vec::new();
    for &r in &centres {
        radii.extend([r - h, r, r + h]);
    }
    let sol =
        solve_schrodinger_bvp(&domain, BoundaryCondition::Dirichlet, &v, &data, z, &radii).unwrap();
    let on_grid = solve_schrodinger_bvp(
        &domain,
        BoundaryCondition::Dirichlet,
        &v,
        &data,
        z,
        &domain.radii(),
    )
    .unwrap();
    let m0 = domain.mode_index(0).unwrap();
    let phi = &v.right_factors()[0];
    let psi = &v.left_factors()[0];
    let pairing: Complex64 = domain
        .radii()
        .iter()
        .zip(domain.measure_weights())
        .zip(&on_grid.field.values[m0])
        .map(|((&r, w), u)| phi.radial(0, r).conj() * u * w)
        .sum();
    for (k, &r) in centres.iter().enumerate() {
        let u = &sol.field.values[m0][3 * k..3 * k + 3];
        let d2 = (u[2] - 2.0 * u[1] + u[0]) / (h * h);
        let d1 = (u[2] - u[0]) / (2.0 * h);
        let res = -d2 - d1 / r - z * u[1] + v.couplings()[0] * psi.radial(0, r) * pairing;
        assert!(res.norm() < 1e-5, "r={r}: {res}");
    }
}
