//! Local potentials on the half-line.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::HalflineError;
use crate::numerics::composite_gauss;

/// Magnitude below which a potential value counts as zero.
pub const NEGLIGIBLE: f64 = 1e-14;

type Evaluator = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// Shape of `V(x)` for `x >= 0`.
#[derive(Clone)]
pub enum Profile {
    /// `depth` on `[0, width]`, zero beyond.
    SquareWell { depth: Complex64, width: f64 },
    /// `amplitude * exp(-(x / width)^2)`.
    Gaussian { amplitude: Complex64, width: f64 },
    /// `amplitude * exp(-rate * x)`.
    Exponential { amplitude: Complex64, rate: f64 },
    /// A smooth user-supplied evaluator.
    Custom { name: String, evaluator: Evaluator },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::SquareWell { depth, width } => {
                write!(f, "SquareWell {{ depth: {depth}, width: {width} }}")
            }
            Profile::Gaussian { amplitude, width } => {
                write!(f, "Gaussian {{ amplitude: {amplitude}, width: {width} }}")
            }
            Profile::Exponential { amplitude, rate } => {
                write!(f, "Exponential {{ amplitude: {amplitude}, rate: {rate} }}")
            }
            Profile::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Which one-sided limit to take at a breakpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `V(x)` in `L^1((0, inf))` together with the bookkeeping the solvers need.
#[derive(Debug, Clone)]
pub struct LocalPotential {
    profile: Profile,
    support_bound: f64,
    l1_norm_estimate: f64,
    breakpoints: Vec<f64>,
}

impl LocalPotential {
    pub fn square_well(depth: impl Into<Complex64>, width: f64) -> Result<Self, HalflineError> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(HalflineError::InvalidPotential(format!(
                "square well width {width}"
            )));
        }
        let depth = depth.into();
        Ok(Self {
            profile: Profile::SquareWell { depth, width },
            support_bound: width,
            l1_norm_estimate: depth.norm() * width,
            breakpoints: vec![width],
        })
    }

    pub fn gaussian(amplitude: impl Into<Complex64>, width: f64) -> Result<Self, HalflineError> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(HalflineError::InvalidPotential(format!(
                "gaussian width {width}"
            )));
        }
        let amplitude = amplitude.into();
        let a = amplitude.norm();
        let support = if a > NEGLIGIBLE {
            width * (a / NEGLIGIBLE).ln().sqrt()
        } else {
            width
        };
        Ok(Self {
            profile: Profile::Gaussian { amplitude, width },
            support_bound: support,
            l1_norm_estimate: a * width * std::f64::consts::PI.sqrt() / 2.0,
            breakpoints: Vec::new(),
        })
    }

    pub fn exponential(amplitude: impl Into<Complex64>, rate: f64) -> Result<Self, HalflineError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(HalflineError::InvalidPotential(format!(
                "exponential rate {rate}"
            )));
        }
        let amplitude = amplitude.into();
        let a = amplitude.norm();
        let support = if a > NEGLIGIBLE {
            (a / NEGLIGIBLE).ln() / rate
        } else {
            1.0 / rate
        };
        Ok(Self {
            profile: Profile::Exponential { amplitude, rate },
            support_bound: support,
            l1_norm_estimate: a / rate,
            breakpoints: Vec::new(),
        })
    }

    /// A smooth potential given by an evaluator, negligible beyond
    /// `support_bound`. The L1 estimate is taken from a 400-node composite
    /// Gauss rule and padded by its difference to the 200-node rule.
    pub fn custom(
        name: impl Into<String>,
        support_bound: f64,
        evaluator: impl Fn(f64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self, HalflineError> {
        if !(support_bound > 0.0) || !support_bound.is_finite() {
            return Err(HalflineError::InvalidPotential(format!(
                "support bound {support_bound}"
            )));
        }
        let evaluator: Evaluator = Arc::new(evaluator);
        let l1_rule = |panels: usize| -> Result<f64, HalflineError> {
            let grid = composite_gauss(panels, 0.0, support_bound, &[], 20)?;
            let mut l1 = 0.0;
            for (node, w) in grid.nodes().iter().zip(grid.weights()) {
                let v = evaluator(node.x());
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(HalflineError::InvalidPotential(format!(
                        "potential is not finite at x = {}",
                        node.x()
                    )));
                }
                l1 += v.norm() * w;
            }
            Ok(l1)
        };
        let l1 = l1_rule(400)?;
        // |V| may have kinks; the half-resolution rule bounds the error
        let spread = (l1 - l1_rule(200)?).abs();
        Ok(Self {
            profile: Profile::Custom {
                name: name.into(),
                evaluator,
            },
            support_bound,
            l1_norm_estimate: l1 * (1.0 + 1e-12) + spread,
            breakpoints: Vec::new(),
        })
    }

    pub fn zero() -> Self {
        Self {
            profile: Profile::SquareWell {
                depth: Complex64::new(0.0, 0.0),
                width: 1.0,
            },
            support_bound: 1.0,
            l1_norm_estimate: 0.0,
            breakpoints: Vec::new(),
        }
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn support_bound(&self) -> f64 {
        self.support_bound
    }

    pub fn l1_norm_estimate(&self) -> f64 {
        self.l1_norm_estimate
    }

    /// Points where `V` jumps; panel and marching grids are aligned to them.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn is_zero(&self) -> bool {
        self.l1_norm_estimate == 0.0
    }

    /// Real-valued potentials give self-adjoint operators.
    pub fn is_real(&self) -> bool {
        match &self.profile {
            Profile::SquareWell { depth, .. } => depth.im == 0.0,
            Profile::Gaussian { amplitude, .. } | Profile::Exponential { amplitude, .. } => {
                amplitude.im == 0.0
            }
            Profile::Custom { .. } => false,
        }
    }

    /// `V(x)`; at a jump the value from the left is returned.
    pub fn value(&self, x: f64) -> Complex64 {
        self.limit(x, Side::Left)
    }

    pub fn limit(&self, x: f64, side: Side) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        if x < 0.0 {
            return zero;
        }
        match &self.profile {
            Profile::SquareWell { depth, width } => {
                let inside = match side {
                    Side::Left => x <= *width,
                    Side::Right => x < *width,
                };
                if inside {
                    *depth
                } else {
                    zero
                }
            }
            Profile::Gaussian { amplitude, width } => amplitude * (-(x / width).powi(2)).exp(),
            Profile::Exponential { amplitude, rate } => amplitude * (-rate * x).exp(),
            Profile::Custom { evaluator, .. } => evaluator(x),
        }
    }

    /// The factors `u = exp(i arg V) |V|^{1/2}` and `v = |V|^{1/2}`, so that
    /// `V = u v`.
    pub fn factors(&self, x: f64) -> (Complex64, f64) {
        let v = self.value(x);
        let m = v.norm();
        if m == 0.0 {
            return (Complex64::new(0.0, 0.0), 0.0);
        }
        let root = m.sqrt();
        (v / m * root, root)
    }
}
