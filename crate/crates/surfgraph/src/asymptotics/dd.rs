//! Double-double arithmetic: an unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`,
//! about 106 bits of mantissa.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dd {
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

/// ln 2 to double-double precision.
pub const LN_2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub const fn new(hi: f64) -> Dd {
        Dd { hi, lo: 0.0 }
    }

    /// Exact for any integer below 2^106.
    pub fn from_u128(x: u128) -> Dd {
        let hi = x as f64;
        let rest = x as i128 - hi as i128;
        Dd::renorm(hi, rest as f64)
    }

    fn renorm(hi: f64, lo: f64) -> Dd {
        let (h, l) = quick_two_sum(hi, lo);
        Dd { hi: h, lo: l }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn mul_f64(self, b: f64) -> Dd {
        let (p, e) = two_prod(self.hi, b);
        Dd::renorm(p, e + self.lo * b)
    }

    /// Natural logarithm, via `x = 2^k · y` with `y ∈ [1/√2, √2)` and
    /// `ln y = 2 atanh((y-1)/(y+1))`.
    pub fn ln(self) -> Dd {
        assert!(self.hi > 0.0, "ln of a non-positive value");
        let (mant, exp) = frexp(self.hi);
        // mant ∈ [0.5, 1)
        let (mant, exp) = if mant < std::f64::consts::FRAC_1_SQRT_2 {
            (mant * 2.0, exp - 1)
        } else {
            (mant, exp)
        };
        let scale = 2f64.powi(-exp);
        let y = Dd {
            hi: mant,
            lo: self.lo * scale,
        };
        let s = (y - Dd::ONE) / (y + Dd::ONE);
        let s2 = s * s;
        let mut term = s;
        let mut acc = s;
        // |s| ≤ 0.172, so 30 odd powers reach far below the last bit
        for k in 1..30 {
            term = term * s2;
            acc = acc + term / Dd::new((2 * k + 1) as f64);
        }
        acc.mul_f64(2.0) + LN_2.mul_f64(exp as f64)
    }
}

fn frexp(x: f64) -> (f64, i32) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    if exp == 0 {
        let (m, e) = frexp(x * 2f64.powi(64));
        return (m, e - 64);
    }
    let mant = f64::from_bits((bits & !(0x7ffu64 << 52)) | (1022u64 << 52));
    (mant, exp - 1022)
}

impl From<f64> for Dd {
    fn from(x: f64) -> Dd {
        Dd::new(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
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

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        Dd::renorm(p, e + (self.hi * b.lo + self.lo * b.hi))
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q, e) = quick_two_sum(q1, q2);
        Dd::new(q) + Dd::new(e) + Dd::new(q3)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            o => o,
        }
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logarithms_to_double_double_precision() {
        // reference digits from a 40-digit evaluation
        let ln3 = Dd::new(3.0).ln();
        assert_eq!(ln3.hi, 1.0986122886681098);
        assert!((ln3.lo - -9.07129723500153e-17).abs() < 1e-31);
        let big = Dd::new(1e10).ln();
        assert_eq!(big.hi, 23.025850929940457);
        assert!((big.lo - -3.94399383981999e-16).abs() < 1e-30);
        let small = Dd::new(1e-300).ln();
        assert!((small.to_f64() + 690.7755278982137).abs() < 1e-12);
    }

    #[test]
    fn arithmetic_keeps_low_bits() {
        let a = Dd::new(1.0) + Dd::new(1e-20);
        assert_eq!(a.hi, 1.0);
        assert_eq!(a.lo, 1e-20);
        let third = Dd::ONE / Dd::new(3.0);
        let back = third.mul_f64(3.0) - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-31);
        assert_eq!(Dd::from_u128((1u128 << 100) + 1) - Dd::new(2f64.powi(100)), Dd::ONE);
    }
}
