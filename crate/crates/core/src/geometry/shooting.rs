//! Per-mode radial integration in `t = ln r`.
//!
//! The regular solution is written `p = r^nu y` and the matched one
//! `q = r^{-nu} s`, which turns both radial equations into
//!
//! `y'' + (2 nu + d - 2) y' + z e^{2t} y = 0`,
//! `s'' + (d - 2 - 2 nu) s' + z e^{2t} s = 0`
//!
//! (primes in `t`; valid for every disk mode and for the ball with `nu = 0`).
//! Particular solutions `u = r^nu w` of `(-Delta - z) u = psi` in one mode
//! solve the `y` equation with source `-e^{2t} psi~(e^t)`, where `psi~` is the
//! profile without its `r^{|n|}` factor. They are integrated alongside `y`,
//! together with the pairings against test profiles, so a single outward
//! pass yields everything the modal Green's function needs.

use num_complex::Complex64;

use super::modal::ModalFunction;
use super::{GeometryError, ModalDomain, RADIAL_START};
use crate::halfline::BoundaryCondition;
use crate::numerics::ode::{integrate, OdeOptions};

/// Outward integration results for one mode.
#[derive(Debug, Clone)]
pub(crate) struct ModeShot {
    pub nu: f64,
    /// Regular solution `p ~ r^nu` and its `r`-derivative at the requested radii.
    pub p: Vec<Complex64>,
    pub dp: Vec<Complex64>,
    /// Particular solutions, `[source][radius]`.
    pub up: Vec<Vec<Complex64>>,
    pub dup: Vec<Vec<Complex64>>,
    pub p1: Complex64,
    pub dp1: Complex64,
    pub up1: Vec<Complex64>,
    pub dup1: Vec<Complex64>,
    /// `int conj(phi_j) u_k r^{d-1} dr`, `[test][source]`.
    pub pair_particular: Vec<Vec<Complex64>>,
    /// `int conj(phi_j) p r^{d-1} dr`.
    pub pair_regular: Vec<Complex64>,
}

impl ModeShot {
    /// Coefficient `alpha` with `G^{bc} psi_k = u_k + alpha p` in this mode.
    pub fn boundary_coefficient(&self, bc: BoundaryCondition, k: usize) -> Complex64 {
        match bc {
            BoundaryCondition::Dirichlet => -self.up1[k] / self.p1,
            BoundaryCondition::Neumann => -self.dup1[k] / self.dp1,
        }
    }
}

fn options() -> OdeOptions {
    OdeOptions {
        rtol: 1e-12,
        atol: 1e-16,
        initial_step: 1e-2,
        max_steps: 2_000_000,
    }
}

/// Scaled regular branch `y = sum a_k r^{2k}`, `a_0 = 1`, and `r y'` from its
/// power series; `z r^2` is kept of order one by the callers.
fn regular_series(z: Complex64, damping: f64, r: f64) -> (Complex64, Complex64) {
    let x = z * (r * r);
    let mut term = Complex64::new(1.0, 0.0);
    let (mut y, mut dy) = (term, Complex64::new(0.0, 0.0));
    for k in 1..200 {
        let kf = k as f64;
        term *= -x / (2.0 * kf * (2.0 * kf + damping));
        y += term;
        dy += term * (2.0 * kf);
        if term.norm() <= 1e-18 * y.norm() {
            break;
        }
    }
    (y, dy)
}

/// Sort order of `radii` and the matching `t = ln r` outputs, checked.
fn output_order(radii: &[f64]) -> Result<Vec<usize>, GeometryError> {
    if let Some(&r) = radii.iter().find(|&&r| !(r >= RADIAL_START && r <= 1.0)) {
        return Err(GeometryError::InvalidRadius(r));
    }
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    Ok(order)
}

pub(crate) fn shoot_mode(
    domain: &ModalDomain,
    mode: i32,
    z: Complex64,
    sources: &[&ModalFunction],
    tests: &[&ModalFunction],
    radii: &[f64],
) -> Result<ModeShot, GeometryError> {
    domain.check_mode(mode)?;
    let nu = domain.order(mode);
    let d = domain.dimension() as f64;
    let damping = 2.0 * nu + d - 2.0;
    let weight_power = (2.0 * nu + d) as i32;
    let ns = sources.len();
    let nt = tests.len();
    let active_s: Vec<bool> = sources.iter().map(|f| f.has_mode(mode)).collect();
    let active_t: Vec<bool> = tests.iter().map(|f| f.has_mode(mode)).collect();

    let dim = 2 + 2 * ns + nt * ns + nt;
    let zero = Complex64::new(0.0, 0.0);
    let mut y0 = vec![zero; dim];
    let order = output_order(radii)?;
    // without integrals to accumulate, start at the first output
    let start = if ns + nt == 0 {
        let first = order.first().map_or(1.0, |&i| radii[i]);
        first.min(1.0 / z.norm().sqrt()).max(RADIAL_START)
    } else {
        RADIAL_START
    };
    let t0 = start.ln();
    (y0[0], y0[1]) = regular_series(z, damping, start);

    let mut outputs: Vec<f64> = order.iter().map(|&i| radii[i].ln()).collect();
    outputs.push(0.0);

    let rhs = |t: f64, s: &[Complex64], ds: &mut [Complex64]| {
        let r = t.exp();
        let e2 = r * r;
        let ze2 = z * e2;
        ds[0] = s[1];
        ds[1] = -s[1] * damping - ze2 * s[0];
        for k in 0..ns {
            let (w, dw) = (s[2 + 2 * k], s[3 + 2 * k]);
            ds[2 + 2 * k] = dw;
            let src = if active_s[k] {
                sources[k].reduced(mode, r)
            } else {
                zero
            };
            ds[3 + 2 * k] = -dw * damping - ze2 * w - src * e2;
        }
        let rw = r.powi(weight_power);
        let base = 2 + 2 * ns;
        for j in 0..nt {
            let phi = if active_t[j] {
                tests[j].reduced(mode, r).conj() * rw
            } else {
                zero
            };
            for k in 0..ns {
                ds[base + j * ns + k] = phi * s[2 + 2 * k];
            }
            ds[base + nt * ns + j] = phi * s[0];
        }
    };
    // the series terms then shrink from the first on, and high modes
    // would make the equation stiff
    let states = if ns + nt == 0 && z.norm() <= 2.0 * (damping + 2.0) {
        outputs
            .iter()
            .map(|t| {
                let (y, dy) = regular_series(z, damping, t.exp());
                vec![y, dy]
            })
            .collect()
    } else {
        integrate(rhs, t0, &y0, &outputs, &options())?
    };

    let mut shot = ModeShot {
        nu,
        p: vec![zero; radii.len()],
        dp: vec![zero; radii.len()],
        up: vec![vec![zero; radii.len()]; ns],
        dup: vec![vec![zero; radii.len()]; ns],
        p1: zero,
        dp1: zero,
        up1: vec![zero; ns],
        dup1: vec![zero; ns],
        pair_particular: vec![vec![zero; ns]; nt],
        pair_regular: vec![zero; nt],
    };
    let lift = |r: f64, v: Complex64, dv: Complex64| -> (Complex64, Complex64) {
        let rn = r.powf(nu);
        (v * rn, (v * nu + dv) * (rn / r))
    };
    for (slot, &i) in order.iter().enumerate() {
        let s = &states[slot];
        let r = radii[i];
        (shot.p[i], shot.dp[i]) = lift(r, s[0], s[1]);
        for k in 0..ns {
            (shot.up[k][i], shot.dup[k][i]) = lift(r, s[2 + 2 * k], s[3 + 2 * k]);
        }
    }
    let end = states.last().expect("r = 1 is always an output");
    (shot.p1, shot.dp1) = lift(1.0, end[0], end[1]);
    for k in 0..ns {
        (shot.up1[k], shot.dup1[k]) = lift(1.0, end[2 + 2 * k], end[3 + 2 * k]);
    }
    let base = 2 + 2 * ns;
    for j in 0..nt {
        for k in 0..ns {
            shot.pair_particular[j][k] = end[base + j * ns + k];
        }
        shot.pair_regular[j] = end[base + nt * ns + j];
    }
    Ok(shot)
}

/// Scaled matched branch `s = r^nu q` and `r d/dr s` at the radii, for the
/// boundary data `(q(1), q'(1))`.
pub(crate) fn shoot_matched(
    domain: &ModalDomain,
    mode: i32,
    z: Complex64,
    boundary: (Complex64, Complex64),
    radii: &[f64],
) -> Result<Vec<(Complex64, Complex64)>, GeometryError> {
    domain.check_mode(mode)?;
    let nu = domain.order(mode);
    let d = domain.dimension() as f64;
    let damping = d - 2.0 - 2.0 * nu;
    let order = output_order(radii)?;
    let outputs: Vec<f64> = order.iter().rev().map(|&i| radii[i].ln()).collect();
    let y0 = [boundary.0, boundary.1 + boundary.0 * nu];
    let rhs = |t: f64, s: &[Complex64], ds: &mut [Complex64]| {
        let e2 = (2.0 * t).exp();
        ds[0] = s[1];
        ds[1] = -s[1] * damping - z * e2 * s[0];
    };
    let states = integrate(rhs, 0.0, &y0, &outputs, &options())?;
    let mut out = vec![(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)); radii.len()];
    for (slot, &i) in order.iter().rev().enumerate() {
        out[i] = (states[slot][0], states[slot][1]);
    }
    Ok(out)
}
