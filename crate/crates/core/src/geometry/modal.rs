//! Modal-radial representations of functions on the domain.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{GeometryError, ModalDomain};

/// One azimuthal component `r^{|mode|} e^{-decay r^2} sum_m c_m r^m`.
///
/// The `r^{|mode|}` prefactor makes the component smooth at the origin; on
/// the ball only `mode = 0` is allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeProfile {
    pub mode: i32,
    #[serde(default)]
    pub decay: f64,
    pub coefficients: Vec<Complex64>,
}

impl ModeProfile {
    pub fn new(mode: i32, decay: f64, coefficients: Vec<Complex64>) -> Self {
        Self {
            mode,
            decay,
            coefficients,
        }
    }

    /// The profile without its `r^{|mode|}` prefactor.
    pub fn reduced(&self, r: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coefficients.iter().rev() {
            acc = acc * r + c;
        }
        acc * (-self.decay * r * r).exp()
    }

    pub fn value(&self, r: f64) -> Complex64 {
        self.reduced(r) * r.powi(self.mode.abs())
    }
}

/// A function given by finitely many [`ModeProfile`] components; several
/// components may share a mode.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ModalFunction {
    components: Vec<ModeProfile>,
}

impl ModalFunction {
    pub fn new(components: Vec<ModeProfile>) -> Result<Self, GeometryError> {
        for c in &components {
            if !c.decay.is_finite() || c.decay < 0.0 {
                return Err(GeometryError::InvalidFunction(format!(
                    "decay {} must be finite and nonnegative",
                    c.decay
                )));
            }
            if c.coefficients
                .iter()
                .any(|a| !a.re.is_finite() || !a.im.is_finite())
            {
                return Err(GeometryError::InvalidFunction(
                    "non-finite coefficient".into(),
                ));
            }
        }
        Ok(Self { components })
    }

    pub fn single(
        mode: i32,
        decay: f64,
        coefficients: Vec<Complex64>,
    ) -> Result<Self, GeometryError> {
        Self::new(vec![ModeProfile::new(mode, decay, coefficients)])
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn components(&self) -> &[ModeProfile] {
        &self.components
    }

    /// Distinct modes with content, increasing.
    pub fn modes(&self) -> Vec<i32> {
        let mut m: Vec<i32> = self
            .components
            .iter()
            .filter(|c| c.coefficients.iter().any(|a| a.norm() > 0.0))
            .map(|c| c.mode)
            .collect();
        m.sort_unstable();
        m.dedup();
        m
    }

    pub fn max_mode(&self) -> u32 {
        self.modes()
            .iter()
            .map(|m| m.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn has_mode(&self, mode: i32) -> bool {
        self.components
            .iter()
            .any(|c| c.mode == mode && c.coefficients.iter().any(|a| a.norm() > 0.0))
    }

    /// `f_mode(r) / r^{|mode|}`.
    pub fn reduced(&self, mode: i32, r: f64) -> Complex64 {
        self.components
            .iter()
            .filter(|c| c.mode == mode)
            .map(|c| c.reduced(r))
            .sum()
    }

    /// `f_mode(r)`.
    pub fn radial(&self, mode: i32, r: f64) -> Complex64 {
        self.reduced(mode, r) * r.powi(mode.abs())
    }

    /// `f(r, theta)`.
    pub fn evaluate(&self, r: f64, theta: f64) -> Complex64 {
        self.modes()
            .iter()
            .map(|&n| self.radial(n, r) * Complex64::from_polar(1.0, n as f64 * theta))
            .sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            components: self
                .components
                .iter()
                .map(|c| ModeProfile {
                    mode: c.mode,
                    decay: c.decay,
                    coefficients: c.coefficients.iter().map(|a| a * s).collect(),
                })
                .collect(),
        }
    }

    /// Checks that every mode fits the domain (only mode 0 on the ball).
    pub fn check_domain(&self, domain: &ModalDomain) -> Result<(), GeometryError> {
        for m in self.modes() {
            domain.check_mode(m)?;
        }
        Ok(())
    }

    /// Samples on the given radii for every domain mode.
    pub fn sample(&self, domain: &ModalDomain, radii: &[f64]) -> ModalField {
        let modes = domain.modes();
        let values = modes
            .iter()
            .map(|&n| radii.iter().map(|&r| self.radial(n, r)).collect())
            .collect();
        ModalField {
            modes,
            radii: radii.to_vec(),
            values,
        }
    }
}

/// A function sampled per mode on a set of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalField {
    pub modes: Vec<i32>,
    pub radii: Vec<f64>,
    /// `values[m][a] = f_{modes[m]}(radii[a])`.
    pub values: Vec<Vec<Complex64>>,
}

impl ModalField {
    pub fn zeros(modes: Vec<i32>, radii: Vec<f64>) -> Self {
        let values = vec![vec![Complex64::new(0.0, 0.0); radii.len()]; modes.len()];
        Self {
            modes,
            radii,
            values,
        }
    }

    pub fn mode(&self, mode: i32) -> Option<&[Complex64]> {
        self.modes
            .iter()
            .position(|&m| m == mode)
            .map(|i| self.values[i].as_slice())
    }

    /// `f(radii[a], theta)`.
    pub fn evaluate(&self, a: usize, theta: f64) -> Complex64 {
        self.modes
            .iter()
            .zip(&self.values)
            .map(|(&n, v)| v[a] * Complex64::from_polar(1.0, n as f64 * theta))
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.norm()))
    }

    pub fn max_abs_difference(&self, other: &ModalField) -> f64 {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }
}
