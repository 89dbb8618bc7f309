use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::dd::Dd;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

/// A real number stored as a sign and the natural log of its magnitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub sign: Sign,
    /// Meaningless when `sign` is `Zero`.
    pub log_magnitude: Dd,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: Sign::Zero,
        log_magnitude: Dd::ZERO,
    };
    pub const ONE: LogValue = LogValue {
        sign: Sign::Positive,
        log_magnitude: Dd::ZERO,
    };

    pub fn from_ln(ln: impl Into<Dd>) -> LogValue {
        let ln = ln.into();
        if ln.hi == f64::NEG_INFINITY {
            return LogValue::ZERO;
        }
        LogValue {
            sign: Sign::Positive,
            log_magnitude: ln,
        }
    }

    pub fn from_f64(x: f64) -> LogValue {
        match x.partial_cmp(&0.0) {
            Some(Ordering::Greater) => LogValue::from_ln(Dd::new(x).ln()),
            Some(Ordering::Less) => -LogValue::from_ln(Dd::new(-x).ln()),
            _ => LogValue::ZERO,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    /// Natural log; `None` unless the value is positive.
    pub fn ln(&self) -> Option<Dd> {
        (self.sign == Sign::Positive).then_some(self.log_magnitude)
    }

    pub fn ln_f64(&self) -> f64 {
        match self.sign {
            Sign::Positive => self.log_magnitude.to_f64(),
            Sign::Zero => f64::NEG_INFINITY,
            Sign::Negative => f64::NAN,
        }
    }

    pub fn to_f64(&self) -> f64 {
        let mag = self.log_magnitude.to_f64().exp();
        match self.sign {
            Sign::Positive => mag,
            Sign::Zero => 0.0,
            Sign::Negative => -mag,
        }
    }

    /// Sum with a fixed pairwise reduction tree, so the result depends only on
    /// the order of `values`.
    pub fn sum(values: &[LogValue]) -> LogValue {
        match values.len() {
            0 => LogValue::ZERO,
            1 => values[0],
            n => {
                let (a, b) = values.split_at(n / 2);
                LogValue::sum(a) + LogValue::sum(b)
            }
        }
    }

    /// Sum of positive terms given by their logs.
    pub fn sum_ln(logs: &[f64]) -> LogValue {
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return LogValue::ZERO;
        }
        let scaled = pairwise(logs, &|x| (x - max).exp());
        LogValue::from_ln(Dd::new(max) + Dd::new(scaled.ln()))
    }
}

fn pairwise(xs: &[f64], f: &dyn Fn(f64) -> f64) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().map(|&x| f(x)).sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise(a, f) + pairwise(b, f)
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        let sign = match self.sign {
            Sign::Positive => Sign::Negative,
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
        };
        LogValue { sign, ..self }
    }
}

impl Add for LogValue {
    type Output = LogValue;
    fn add(self, b: LogValue) -> LogValue {
        if self.is_zero() {
            return b;
        }
        if b.is_zero() {
            return self;
        }
        let (big, small) = if self.log_magnitude >= b.log_magnitude {
            (self, b)
        } else {
            (b, self)
        };
        let ratio = (small.log_magnitude - big.log_magnitude).to_f64().exp();
        if big.sign == small.sign {
            LogValue {
                sign: big.sign,
                log_magnitude: big.log_magnitude + Dd::new(ratio.ln_1p()),
            }
        } else if ratio == 1.0 && small.log_magnitude == big.log_magnitude {
            LogValue::ZERO
        } else {
            LogValue {
                sign: big.sign,
                log_magnitude: big.log_magnitude + Dd::new((-ratio).ln_1p()),
            }
        }
    }
}

impl Sub for LogValue {
    type Output = LogValue;
    fn sub(self, b: LogValue) -> LogValue {
        self + (-b)
    }
}

fn sign_product(a: Sign, b: Sign) -> Sign {
    match (a, b) {
        (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
        (x, y) if x == y => Sign::Positive,
        _ => Sign::Negative,
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, b: LogValue) -> LogValue {
        match sign_product(self.sign, b.sign) {
            Sign::Zero => LogValue::ZERO,
            sign => LogValue {
                sign,
                log_magnitude: self.log_magnitude + b.log_magnitude,
            },
        }
    }
}

impl Div for LogValue {
    type Output = LogValue;
    fn div(self, b: LogValue) -> LogValue {
        assert!(!b.is_zero(), "division by zero");
        match sign_product(self.sign, b.sign) {
            Sign::Zero => LogValue::ZERO,
            sign => LogValue {
                sign,
                log_magnitude: self.log_magnitude - b.log_magnitude,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_matches_plain_floats() {
        let a = LogValue::from_f64(3.0);
        let b = LogValue::from_f64(-5.0);
        assert!(((a + b).to_f64() + 2.0).abs() < 1e-14);
        assert!(((a * b).to_f64() + 15.0).abs() < 1e-13);
        assert!(((b / a).to_f64() + 5.0 / 3.0).abs() < 1e-14);
        assert!((a - a).is_zero());
        assert_eq!(LogValue::ZERO + a, a);
    }

    #[test]
    fn huge_magnitudes_survive() {
        let x = LogValue::from_ln(1e12);
        let y = LogValue::from_ln(1e12 - 1.0);
        let s = x + y;
        let offset = (s.log_magnitude - Dd::new(1e12)).to_f64();
        assert!((offset - (-1f64).exp().ln_1p()).abs() < 1e-12);
    }

    #[test]
    fn sum_is_insensitive_to_order() {
        let logs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64 * 0.37).collect();
        let mut rev = logs.clone();
        rev.reverse();
        let a = LogValue::sum_ln(&logs).ln_f64();
        let b = LogValue::sum_ln(&rev).ln_f64();
        assert!((a - b).abs() <= 1e-12 * a.abs());
        let values: Vec<LogValue> = logs.iter().map(|&l| LogValue::from_ln(l)).collect();
        assert!((LogValue::sum(&values).ln_f64() - a).abs() <= 1e-12 * a.abs());
    }
}
