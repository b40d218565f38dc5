//! Double-double arithmetic for cancellation-prone recurrence identities.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    /// Exact scaling by `2^e` (barring under/overflow).
    pub fn ldexp(self, e: i32) -> Self {
        let s = pow2(e);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }
}

pub(crate) fn pow2(e: i32) -> f64 {
    // Split to stay within the normal range for |e| up to ~2000.
    if e.abs() <= 1000 {
        2f64.powi(e)
    } else {
        2f64.powi(e / 2) * 2f64.powi(e - e / 2)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// `a/b` without overflow in the intermediate `|b|²`.
pub(crate) fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    let m = b.re.abs().max(b.im.abs());
    if m == 0.0 || !m.is_finite() {
        return a / b;
    }
    let e = -(m.log2().floor() as i32);
    let s = pow2(e);
    (a * s) / (b * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct CDd {
    pub re: Dd,
    pub im: Dd,
}

impl CDd {
    pub fn from_c64(z: Complex64) -> Self {
        CDd {
            re: Dd::from_f64(z.re),
            im: Dd::from_f64(z.im),
        }
    }

    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn ldexp(self, e: i32) -> Self {
        CDd {
            re: self.re.ldexp(e),
            im: self.im.ldexp(e),
        }
    }

    /// Base-2 exponent of the larger component; `None` for zero.
    pub fn exponent(self) -> Option<i32> {
        let m = self.re.hi.abs().max(self.im.hi.abs());
        if m == 0.0 || !m.is_finite() {
            None
        } else {
            Some(m.log2().floor() as i32)
        }
    }
}

impl Add for CDd {
    type Output = CDd;
    fn add(self, o: CDd) -> CDd {
        CDd {
            re: self.re + o.re,
            im: self.im + o.im,
        }
    }
}

impl Sub for CDd {
    type Output = CDd;
    fn sub(self, o: CDd) -> CDd {
        CDd {
            re: self.re - o.re,
            im: self.im - o.im,
        }
    }
}

impl Mul for CDd {
    type Output = CDd;
    fn mul(self, o: CDd) -> CDd {
        CDd {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_lost_bits() {
        let a = Dd::from_f64(1.0);
        let b = Dd::from_f64(1e-20);
        let s = (a + b) - a;
        assert_eq!(s.to_f64(), 1e-20);
    }

    #[test]
    fn product_is_exact_to_double_double() {
        let x = Dd::from_f64(1.0 + f64::EPSILON);
        let p = x * x;
        // (1+ε)² = 1 + 2ε + ε²; the ε² term survives in lo.
        assert_eq!(p.hi, 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(p.lo, f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn complex_mul_matches_f64() {
        let a = Complex64::new(0.3, -1.7);
        let b = Complex64::new(2.5, 0.25);
        let p = (CDd::from_c64(a) * CDd::from_c64(b)).to_c64();
        assert!((p - a * b).norm() < 1e-15);
    }

    #[test]
    fn division_avoids_overflow() {
        let a = Complex64::new(1e150, -2e150);
        let b = Complex64::new(3e180, 4e180);
        let q = cdiv(a, b);
        assert!(q.is_finite());
        assert!((q * b - a).norm() < 1e-15 * a.norm());
    }

    #[test]
    fn ldexp_is_exact() {
        let x = CDd::from_c64(Complex64::new(3.0, -5.0))
            .ldexp(-700)
            .ldexp(700);
        assert_eq!(x.to_c64(), Complex64::new(3.0, -5.0));
        assert!(pow2(-1070) > 0.0 && pow2(-1070) * pow2(1000) > 0.0);
    }
}
