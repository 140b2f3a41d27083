//! Bessel functions of the first kind at complex argument by the ascending
//! series.
//!
//! The series alternates for real arguments and its largest term grows like
//! `e^{|w|}`, so the terms are accumulated in double-double arithmetic. With
//! roughly 32 significant digits the cancellation stays below the `f64`
//! output precision for `|w| <= 30`; between 30 and 60 the result loses up
//! to `log10(e^{|w|}) - 16` digits for near-real arguments.

use num_complex::Complex64;

use super::NumericsError;

pub const MAX_ARGUMENT: f64 = 60.0;
pub const MAX_ORDER: u32 = 40;

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        (s, b - (s - a))
    }

    #[inline]
    fn two_prod(a: f64, b: f64) -> (f64, f64) {
        let p = a * b;
        (p, a.mul_add(b, -p))
    }

    fn add(self, o: Dd) -> Dd {
        let (s, e) = Self::two_sum(self.hi, o.hi);
        let (t, f) = Self::two_sum(self.lo, o.lo);
        let (s, e) = Self::quick_two_sum(s, e + t);
        let (hi, lo) = Self::quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = Self::two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = Self::quick_two_sum(p, e);
        Dd { hi, lo }
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.hi / d;
        let (p, e) = Self::two_prod(q1, d);
        let r = (self.hi - p - e + self.lo) / d;
        let (hi, lo) = Self::quick_two_sum(q1, r);
        Dd { hi, lo }
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[derive(Debug, Clone, Copy)]
struct DdComplex {
    re: Dd,
    im: Dd,
}

impl DdComplex {
    fn from(z: Complex64) -> Self {
        Self {
            re: Dd::from(z.re),
            im: Dd::from(z.im),
        }
    }

    fn add(self, o: Self) -> Self {
        Self {
            re: self.re.add(o.re),
            im: self.im.add(o.im),
        }
    }

    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    fn div_f64(self, d: f64) -> Self {
        Self {
            re: self.re.div_f64(d),
            im: self.im.div_f64(d),
        }
    }

    fn norm_estimate(self) -> f64 {
        self.re.hi.abs() + self.im.hi.abs()
    }

    fn to_complex(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
}

/// `J_n(w)` for `0 <= n <= 40`, `|w| <= 60`.
pub fn bessel_j(order: u32, w: Complex64) -> Result<Complex64, NumericsError> {
    if order > MAX_ORDER || !(w.norm() <= MAX_ARGUMENT) {
        return Err(NumericsError::OutsideEnvelope(format!(
            "bessel_j({order}, {w}) outside order <= {MAX_ORDER}, |w| <= {MAX_ARGUMENT}"
        )));
    }
    let half = DdComplex::from(w * 0.5);
    // (w/2)^n / n!
    let mut lead = DdComplex::from(Complex64::new(1.0, 0.0));
    for k in 1..=order {
        lead = lead.mul(half).div_f64(k as f64);
    }
    if lead.norm_estimate() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let q = half.mul(half);
    let minus_q = DdComplex {
        re: q.re.neg(),
        im: q.im.neg(),
    };
    let mut term = lead;
    let mut sum = DdComplex {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };
    let mut peak = term.norm_estimate();
    let n = order as f64;
    for k in 0..400u32 {
        sum = sum.add(term);
        let kf = k as f64 + 1.0;
        term = term.mul(minus_q).div_f64(kf * (kf + n));
        let t = term.norm_estimate();
        peak = peak.max(t);
        // past the peak the terms decay faster than geometrically
        if kf * (kf + n) > q.norm_estimate() && t <= 1e-34 * peak.max(sum.norm_estimate()) {
            break;
        }
    }
    Ok(sum.to_complex())
}

/// `J_n'(w) = (J_{n-1}(w) - J_{n+1}(w)) / 2`, with `J_0' = -J_1`.
pub fn bessel_j_derivative(order: u32, w: Complex64) -> Result<Complex64, NumericsError> {
    if order == 0 {
        return Ok(-bessel_j(1, w)?);
    }
    if order >= MAX_ORDER {
        return Err(NumericsError::OutsideEnvelope(format!(
            "derivative of order {order} needs J_{}",
            order + 1
        )));
    }
    Ok((bessel_j(order - 1, w)? - bessel_j(order + 1, w)?) * 0.5)
}
