//! Regular and Jost solutions of `-y'' + V y = z y` from their Volterra
//! integral equations.
//!
//! The equations are discretized by the composite trapezoid rule on a grid
//! whose segment boundaries include `0`, every jump of `V`, every requested
//! output point and the support bound. Within a segment the integrand is
//! smooth, so the error has an expansion in even powers of the step and three
//! levels `h, h/2, h/4` are combined by Richardson extrapolation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::potential::{LocalPotential, Side};
use super::HalflineError;
use crate::numerics::SpectralPoint;
use crate::parallel;

/// Base trapezoid step in units of the local wavelength scale.
const BASE_STEP: f64 = 0.04;
const LEVELS: usize = 3;

/// Values and derivatives of one solution on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSample {
    pub x_grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub derivatives: Vec<Complex64>,
    /// Difference between the last two extrapolation levels, relative to
    /// the largest value.
    pub extrapolation_error: f64,
}

impl SolutionSample {
    pub fn len(&self) -> usize {
        self.x_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_grid.is_empty()
    }

    /// Index of `x` in the grid; no interpolation.
    pub fn index_of(&self, x: f64) -> Result<usize, HalflineError> {
        self.x_grid
            .iter()
            .position(|&t| t == x)
            .ok_or(HalflineError::NotOnGrid(x))
    }

    pub fn at(&self, x: f64) -> Result<(Complex64, Complex64), HalflineError> {
        let i = self.index_of(x)?;
        Ok((self.values[i], self.derivatives[i]))
    }
}

/// `W(f, g)(x) = f(x) g'(x) - f'(x) g(x)`, only at common grid nodes.
pub fn wronskian(
    f: &SolutionSample,
    g: &SolutionSample,
    x: f64,
) -> Result<Complex64, HalflineError> {
    let (fv, fd) = f.at(x)?;
    let (gv, gd) = g.at(x)?;
    Ok(fv * gd - fd * gv)
}

/// The point beyond which the Jost solution is taken to be its free
/// asymptote: `max(L_V + 10 / Im k, L_V + 5)`.
pub fn jost_cutoff(v: &LocalPotential, z: SpectralPoint) -> f64 {
    let l = v.support_bound();
    let im = z.root().im;
    if im > 0.0 {
        (l + 10.0 / im).max(l + 5.0)
    } else {
        l + 5.0
    }
}

/// `(phi, theta)` with `phi(0) = 0, phi'(0) = 1` and `theta(0) = 1,
/// theta'(0) = 0`.
pub fn regular_solutions(
    v: &LocalPotential,
    z: SpectralPoint,
    x_grid: &[f64],
) -> Result<(SolutionSample, SolutionSample), HalflineError> {
    let k = wavenumber(z)?;
    validate_grid(x_grid)?;
    let layout = Layout::new(v, k, x_grid);
    let phi = layout.extrapolate(x_grid, |level| {
        layout.march_forward(v, k, level, x_grid, |t| ((k * t).sin() / k, (k * t).cos()))
    });
    let theta = layout.extrapolate(x_grid, |level| {
        layout.march_forward(v, k, level, x_grid, |t| ((k * t).cos(), -k * (k * t).sin()))
    });
    Ok((phi, theta))
}

/// The Jost solution `f(z, x) ~ exp(i k x)` as `x -> inf`, by backward
/// integration from the support bound (beyond which it is exactly free).
pub fn jost_solution(
    v: &LocalPotential,
    z: SpectralPoint,
    x_grid: &[f64],
) -> Result<SolutionSample, HalflineError> {
    let k = wavenumber(z)?;
    validate_grid(x_grid)?;
    let layout = Layout::new(v, k, x_grid);
    let tail = v.limit(layout.end, Side::Right).norm();
    if tail > 1e-12 {
        return Err(HalflineError::Truncation {
            length: layout.end,
            value: tail,
        });
    }
    Ok(layout.extrapolate(x_grid, |level| layout.march_backward(v, k, level, x_grid)))
}

fn wavenumber(z: SpectralPoint) -> Result<Complex64, HalflineError> {
    if z.is_zero() {
        return Err(HalflineError::ZeroSpectralPoint);
    }
    let k = z.root();
    if !k.re.is_finite() || !k.im.is_finite() {
        return Err(HalflineError::InvalidGrid(format!(
            "non-finite spectral point {}",
            z.z()
        )));
    }
    Ok(k)
}

fn validate_grid(x_grid: &[f64]) -> Result<(), HalflineError> {
    for w in x_grid.windows(2) {
        if !(w[0] < w[1]) {
            return Err(HalflineError::InvalidGrid(
                "grid must be strictly increasing".into(),
            ));
        }
    }
    if let Some(&x) = x_grid.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(HalflineError::InvalidGrid(format!(
            "grid point {x} outside [0, inf)"
        )));
    }
    Ok(())
}

/// Knot grid of one refinement level together with the trapezoid weight
/// halves and one-sided potential values.
struct Knots {
    t: Vec<f64>,
    // V integrated against the left and right half-weights
    vw: Vec<Complex64>,
    left: Vec<Complex64>,
    right: Vec<Complex64>,
    e_plus: Vec<Complex64>,
    e_minus: Vec<Complex64>,
}

struct Layout {
    bounds: Vec<f64>,
    panels: Vec<usize>,
    end: f64,
}

impl Layout {
    fn new(v: &LocalPotential, k: Complex64, x_grid: &[f64]) -> Self {
        let end = v.support_bound();
        let mut bounds = vec![0.0, end];
        bounds.extend(
            v.breakpoints()
                .iter()
                .copied()
                .filter(|&b| b > 0.0 && b < end),
        );
        bounds.extend(x_grid.iter().copied().filter(|&x| x > 0.0 && x < end));
        bounds.sort_by(f64::total_cmp);
        bounds.dedup();

        let samples = 512;
        let vmax = (0..=samples)
            .map(|i| v.value(end * i as f64 / samples as f64).norm())
            .chain(bounds.iter().map(|&b| v.limit(b, Side::Right).norm()))
            .fold(0.0f64, f64::max);
        let scale = 1f64.max(k.norm()).max(vmax.sqrt()).max(k.im.abs());
        let h = BASE_STEP / scale;
        let panels = bounds
            .windows(2)
            .map(|w| ((w[1] - w[0]) / h).ceil().max(1.0) as usize)
            .collect();
        Self {
            bounds,
            panels,
            end,
        }
    }

    fn knots(&self, v: &LocalPotential, k: Complex64, level: usize) -> Knots {
        let mut t = vec![self.bounds[0]];
        for (w, &m) in self.bounds.windows(2).zip(&self.panels) {
            let m = m << level;
            let h = (w[1] - w[0]) / m as f64;
            for j in 1..m {
                t.push(w[0] + j as f64 * h);
            }
            t.push(w[1]);
        }
        let n = t.len();
        let mut left = vec![Complex64::new(0.0, 0.0); n];
        let mut right = vec![Complex64::new(0.0, 0.0); n];
        let mut vw = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            if i > 0 {
                left[i] = v.limit(t[i], Side::Left) * (0.5 * (t[i] - t[i - 1]));
            }
            if i + 1 < n {
                right[i] = v.limit(t[i], Side::Right) * (0.5 * (t[i + 1] - t[i]));
            }
            vw[i] = left[i] + right[i];
        }
        let ik = Complex64::i() * k;
        let e_plus = t.iter().map(|&x| (ik * x).exp()).collect();
        let e_minus = t.iter().map(|&x| (-ik * x).exp()).collect();
        Knots {
            t,
            vw,
            left,
            right,
            e_plus,
            e_minus,
        }
    }

    /// Runs `solve` on three levels and extrapolates at the output grid.
    fn extrapolate(
        &self,
        x_grid: &[f64],
        solve: impl Fn(usize) -> (Vec<Complex64>, Vec<Complex64>) + Sync,
    ) -> SolutionSample {
        let levels: Vec<(Vec<Complex64>, Vec<Complex64>)> = parallel::map_range(LEVELS, &solve);
        let combine = |col: fn(&(Vec<Complex64>, Vec<Complex64>)) -> &Vec<Complex64>| {
            let (f0, f1, f2) = (col(&levels[0]), col(&levels[1]), col(&levels[2]));
            let mut out = Vec::with_capacity(f0.len());
            let mut diff = 0.0f64;
            let mut size = 0.0f64;
            for i in 0..f0.len() {
                let r = (f2[i] * 64.0 - f1[i] * 20.0 + f0[i]) / 45.0;
                let a2 = (f2[i] * 4.0 - f1[i]) / 3.0;
                diff = diff.max((r - a2).norm());
                size = size.max(r.norm());
                out.push(r);
            }
            (out, if size > 0.0 { diff / size } else { diff })
        };
        let (values, ev) = combine(|l| &l.0);
        let (derivatives, ed) = combine(|l| &l.1);
        SolutionSample {
            x_grid: x_grid.to_vec(),
            values,
            derivatives,
            extrapolation_error: ev.max(ed),
        }
    }

    fn march_forward(
        &self,
        v: &LocalPotential,
        k: Complex64,
        level: usize,
        x_grid: &[f64],
        free: impl Fn(Complex64) -> (Complex64, Complex64),
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let kn = self.knots(v, k, level);
        let n = kn.t.len();
        let two_ik = Complex64::i() * k * 2.0;
        // c[j] = trapezoid weight * V * y at knot j
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let (ep, em) = (kn.e_plus[i], kn.e_minus[i]);
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..i {
                s += (ep * kn.e_minus[j] - em * kn.e_plus[j]) * c[j];
            }
            y[i] = free(Complex64::new(kn.t[i], 0.0)).0 + s / two_ik;
            c[i] = kn.vw[i] * y[i];
        }
        let eval = |x: f64| -> (Complex64, Complex64) {
            let ik = Complex64::i() * k;
            let (ep, em) = ((ik * x).exp(), (-ik * x).exp());
            let (y0, d0) = free(Complex64::new(x, 0.0));
            if x >= self.end {
                let mut s = Complex64::new(0.0, 0.0);
                let mut d = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    let a = ep * kn.e_minus[j];
                    let b = em * kn.e_plus[j];
                    s += (a - b) * c[j];
                    d += (a + b) * c[j];
                }
                return (y0 + s / two_ik, d0 + d * 0.5);
            }
            let i = position(&kn.t, x);
            let mut d = Complex64::new(0.0, 0.0);
            for j in 0..i {
                d += (ep * kn.e_minus[j] + em * kn.e_plus[j]) * c[j];
            }
            (y[i], d0 + d * 0.5 + kn.left[i] * y[i])
        };
        x_grid.iter().map(|&x| eval(x)).unzip()
    }

    fn march_backward(
        &self,
        v: &LocalPotential,
        k: Complex64,
        level: usize,
        x_grid: &[f64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let kn = self.knots(v, k, level);
        let n = kn.t.len();
        let ik = Complex64::i() * k;
        let two_ik = ik * 2.0;
        let mut f = vec![Complex64::new(0.0, 0.0); n];
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            let (ep, em) = (kn.e_plus[i], kn.e_minus[i]);
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..n {
                s += (ep * kn.e_minus[j] - em * kn.e_plus[j]) * c[j];
            }
            f[i] = ep - s / two_ik;
            c[i] = kn.vw[i] * f[i];
        }
        let eval = |x: f64| -> (Complex64, Complex64) {
            let e = (ik * x).exp();
            if x >= self.end {
                return (e, ik * e);
            }
            let i = position(&kn.t, x);
            let (ep, em) = (kn.e_plus[i], kn.e_minus[i]);
            let mut d = Complex64::new(0.0, 0.0);
            for j in i + 1..n {
                d += (ep * kn.e_minus[j] + em * kn.e_plus[j]) * c[j];
            }
            (f[i], ik * e - d * 0.5 - kn.right[i] * f[i])
        };
        x_grid.iter().map(|&x| eval(x)).unzip()
    }
}

fn position(t: &[f64], x: f64) -> usize {
    t.binary_search_by(|p| p.total_cmp(&x))
        .expect("output points are knots of every level")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_regular_solutions() {
        let v = LocalPotential::zero();
        let xs = [0.0, 0.5, 1.0, 3.0];
        let (phi, theta) = regular_solutions(&v, SpectralPoint::from_parts(1.0, 0.0), &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert!((phi.values[i] - x.sin()).norm() < 1e-14);
            assert!((theta.values[i] - x.cos()).norm() < 1e-14);
            assert!((phi.derivatives[i] - x.cos()).norm() < 1e-14);
        }
        let (phi, _) = regular_solutions(&v, SpectralPoint::from_parts(-1.0, 0.0), &xs).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            assert!((phi.values[i] - x.sinh()).norm() < 1e-13);
        }
    }

    #[test]
    fn free_jost_solution() {
        let v = LocalPotential::zero();
        let f = jost_solution(&v, SpectralPoint::from_parts(-1.0, 0.0), &[0.0, 2.0]).unwrap();
        assert!((f.values[1] - (-2.0f64).exp()).norm() < 1e-15);
        assert!((f.values[0] - 1.0).norm() < 1e-15);
    }

    #[test]
    fn wronskian_needs_exact_nodes() {
        let v = LocalPotential::zero();
        let (phi, theta) =
            regular_solutions(&v, SpectralPoint::from_parts(1.0, 0.0), &[0.0, 0.7]).unwrap();
        assert!((wronskian(&phi, &theta, 0.7).unwrap() - c(-1.0, 0.0)).norm() < 1e-14);
        assert_eq!(wronskian(&phi, &phi, 0.7).unwrap(), c(0.0, 0.0));
        assert!(matches!(
            wronskian(&phi, &theta, 0.3),
            Err(HalflineError::NotOnGrid(_))
        ));
    }

    #[test]
    fn rejects_zero_and_bad_grids() {
        let v = LocalPotential::zero();
        assert!(matches!(
            jost_solution(&v, SpectralPoint::from_parts(0.0, 0.0), &[0.0]),
            Err(HalflineError::ZeroSpectralPoint)
        ));
        assert!(regular_solutions(&v, SpectralPoint::from_parts(-1.0, 0.0), &[1.0, 0.5]).is_err());
        assert!(regular_solutions(&v, SpectralPoint::from_parts(-1.0, 0.0), &[-1.0]).is_err());
    }

    #[test]
    fn jost_cutoff_formula() {
        let v = LocalPotential::square_well(2.0, 1.0).unwrap();
        assert_eq!(jost_cutoff(&v, SpectralPoint::from_parts(-1.0, 0.0)), 11.0);
        assert_eq!(jost_cutoff(&v, SpectralPoint::from_parts(-100.0, 0.0)), 6.0);
    }
}
