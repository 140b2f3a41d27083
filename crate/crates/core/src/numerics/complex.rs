//! Branch-correct square root and the spectral parameter.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Square root with `Im(w) >= 0`, cut along `[0, inf)`.
///
/// On the positive real axis the upper-edge limit is returned, i.e. the
/// positive real root.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let w = z.sqrt();
    if w.im < 0.0 || (w.im == 0.0 && w.re < 0.0) {
        -w
    } else {
        w
    }
}

/// A spectral parameter `z` together with its root `z^{1/2}`, `Im >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    z: Complex64,
    root: Complex64,
}

impl SpectralPoint {
    pub fn new(z: Complex64) -> Self {
        Self {
            z,
            root: principal_sqrt(z),
        }
    }

    pub fn from_parts(re: f64, im: f64) -> Self {
        Self::new(Complex64::new(re, im))
    }

    #[inline]
    pub fn z(&self) -> Complex64 {
        self.z
    }

    /// `z^{1/2}` with nonnegative imaginary part.
    #[inline]
    pub fn root(&self) -> Complex64 {
        self.root
    }

    pub fn conj(&self) -> Self {
        Self::new(self.z.conj())
    }

    /// True when `z` lies on the cut `[0, inf)`, where `Im(z^{1/2}) = 0`.
    pub fn on_cut(&self) -> bool {
        self.z.im == 0.0 && self.z.re >= 0.0
    }

    pub fn is_zero(&self) -> bool {
        self.z.re == 0.0 && self.z.im == 0.0
    }
}

impl From<Complex64> for SpectralPoint {
    fn from(z: Complex64) -> Self {
        Self::new(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trivial_roots() {
        assert_eq!(principal_sqrt(c(-1.0, 0.0)), c(0.0, 1.0));
        assert_eq!(principal_sqrt(c(-1.0, -0.0)), c(0.0, 1.0));
        assert_eq!(principal_sqrt(c(4.0, 0.0)), c(2.0, 0.0));
        let w = principal_sqrt(c(0.0, 2.0));
        assert!((w - c(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_and_cut() {
        assert_eq!(principal_sqrt(c(0.0, 0.0)), c(0.0, 0.0));
        assert!(SpectralPoint::from_parts(3.0, 0.0).on_cut());
        assert!(!SpectralPoint::from_parts(-3.0, 0.0).on_cut());
    }

    proptest! {
        #[test]
        fn branch_coherence(re in -50.0f64..50.0, im in -50.0f64..50.0) {
            let z = c(re, im);
            prop_assume!(!(im == 0.0 && re >= 0.0));
            let p = SpectralPoint::new(z);
            prop_assert!(p.root().im > 0.0);
            let rel = (p.root() * p.root() - z).norm() / z.norm().max(1e-300);
            prop_assert!(rel <= 1e-14);
            if im != 0.0 {
                let pc = SpectralPoint::new(z.conj());
                // off the cut the root of the conjugate is minus the conjugate root
                prop_assert!((pc.root() + p.root().conj()).norm() <= 1e-14 * p.root().norm());
            }
        }
    }
}
