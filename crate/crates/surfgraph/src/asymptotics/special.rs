//! Logarithms of factorials, falling factorials and binomials, accurate for
//! arguments far beyond the range where the plain values fit in a float.

use statrs::function::gamma::ln_gamma;

use super::dd::Dd;

/// ½ ln 2π in double-double.
pub const HALF_LN_2PI: Dd = Dd {
    hi: 0.918_938_533_204_672_8,
    lo: -3.878_294_158_067_241_4e-17,
};

/// Below this argument `ln Γ(x+1)` is taken from a Lanczos evaluation.
const STIRLING_FROM: f64 = 15.0;

/// Tail of the Stirling series, `ln Γ(x+1) - (x+½)ln x + x - ½ln 2π`.
fn stirling_tail(x: f64) -> f64 {
    let r = 1.0 / x;
    let r2 = r * r;
    r * (1.0 / 12.0 - r2 * (1.0 / 360.0 - r2 * (1.0 / 1260.0 - r2 * (1.0 / 1680.0))))
}

/// `ln Γ(x+1)` for `x ≥ 0`.
pub fn ln_gamma_1p(x: f64) -> f64 {
    if x < STIRLING_FROM {
        ln_gamma(x + 1.0)
    } else {
        (x + 0.5) * x.ln() - x + HALF_LN_2PI.hi + stirling_tail(x)
    }
}

pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma_1p(n as f64)
}

/// `ln n!` in double-double; exact up to rounding of the final log for `n ≤ 30`.
pub fn ln_factorial_dd(n: u64) -> Dd {
    if n <= 30 {
        let f: u128 = (1..=n as u128).product();
        return Dd::from_u128(f).ln();
    }
    let x = Dd::from_u128(n as u128);
    (x + Dd::new(0.5)) * x.ln() - x + HALF_LN_2PI + Dd::new(stirling_tail(n as f64))
}

/// `ln (x)_k = ln x(x-1)…(x-k+1)` for real `x > k - 1`; `None` otherwise, where
/// the truncated falling factorial is taken as zero.
pub fn ln_falling(x: f64, k: u64) -> Option<f64> {
    let kf = k as f64;
    if k > 0 && x <= kf - 1.0 {
        return None;
    }
    if k == 0 {
        return Some(0.0);
    }
    let a = x - kf;
    if a >= STIRLING_FROM {
        Some(kf * x.ln() - (a + 0.5) * (-kf / x).ln_1p() - kf + stirling_tail(x) - stirling_tail(a))
    } else {
        Some(ln_gamma_1p(x) - ln_gamma_1p(a))
    }
}

/// `ln((n)_k / n^k)`, the log probability that `k` draws from `n` are distinct.
pub fn ln_falling_ratio(n: f64, k: u64) -> Option<f64> {
    let kf = k as f64;
    if kf > n {
        return None;
    }
    let rest = n - kf;
    if rest >= STIRLING_FROM {
        Some(-(rest + 0.5) * (-kf / n).ln_1p() - kf + stirling_tail(n) - stirling_tail(rest))
    } else {
        ln_falling(n, k).map(|v| v - kf * n.ln())
    }
}

pub fn ln_binomial(n: f64, k: u64) -> Option<f64> {
    ln_falling(n, k).map(|v| v - ln_factorial(k))
}

/// `ln (x)_k` in double-double for an integer `x ≥ k`.
pub fn ln_falling_dd(x: u128, k: u64) -> Option<Dd> {
    if (k as u128) > x {
        return None;
    }
    let a = x - k as u128;
    if (a as f64) < STIRLING_FROM {
        let top = ln_gamma_dd(x);
        let bottom = ln_gamma_dd(a);
        return Some(top - bottom);
    }
    let (xd, ad, kd) = (Dd::from_u128(x), Dd::from_u128(a), Dd::from_u128(k as u128));
    // k ln x - (a + ½) ln(a/x) - k + S(x) - S(a)
    Some(
        kd * xd.ln() - (ad + Dd::new(0.5)) * (ad / xd).ln() - kd
            + Dd::new(stirling_tail(x as f64) - stirling_tail(a as f64)),
    )
}

fn ln_gamma_dd(x: u128) -> Dd {
    if x <= 30 {
        ln_factorial_dd(x as u64)
    } else {
        let xd = Dd::from_u128(x);
        (xd + Dd::new(0.5)) * xd.ln() - xd + HALF_LN_2PI + Dd::new(stirling_tail(x as f64))
    }
}

/// `ln C(x, k)` in double-double for an integer `x ≥ k`.
pub fn ln_binomial_dd(x: u128, k: u64) -> Option<Dd> {
    ln_falling_dd(x, k).map(|v| v - ln_gamma_dd(k as u128))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1.0)
    }

    #[test]
    fn factorials() {
        assert!(close(ln_factorial(10), 3628800f64.ln(), 1e-14));
        // 40-digit reference for ln(100!)
        assert!(close(ln_factorial(100), 363.73937555556347, 1e-14));
        let dd = ln_factorial_dd(10_000_000_000);
        assert!(close(dd.to_f64(), 220258509311.83643, 1e-15));
        assert!(close(ln_factorial_dd(20).to_f64(), 42.335616460753485, 1e-15));
    }

    #[test]
    fn falling_factorials() {
        assert!(close(ln_falling(10.0, 3).unwrap(), 720f64.ln(), 1e-14));
        assert_eq!(ln_falling(2.0, 4), None);
        assert_eq!(ln_falling(3.0, 4), None);
        assert!(close(ln_falling(3.5, 4).unwrap(), (3.5f64 * 2.5 * 1.5 * 0.5).ln(), 1e-14));
        // (10^6)_(3000) / 10^(6·3000), 40-digit reference
        let r = ln_falling_ratio(1e6, 3000).unwrap();
        assert!(close(r, -4.503004507914955, 1e-12), "{r}");
        assert!(close(ln_falling(1e6, 3000).unwrap(), 3000.0 * 1e6f64.ln() - 4.503004507914955, 1e-14));
        assert!(close(ln_binomial_dd(50, 25).unwrap().to_f64(), 126410606437752f64.ln(), 1e-15));
        let big = ln_binomial_dd(499_999_999_999_500_000_000_000, 500_000_000_000).unwrap();
        // 60-digit reference 14315510557949.13622860706
        let frac = (big - Dd::new(14315510557949.0)).to_f64();
        assert!((frac - 0.13622860706).abs() < 1e-6, "{frac}");
        assert!(close(ln_binomial(50.0, 25).unwrap(), 126410606437752f64.ln(), 1e-14));
        assert!(close(ln_falling_ratio(20.0, 20).unwrap(), ln_factorial(20) - 20.0 * 20f64.ln(), 1e-13));
    }
}
