//! Log-space evaluation of the closed forms and sums describing the typical
//! structure of graphs on a surface: regime classification, the excess fixed
//! point, the core and deficiency sums and the leading-order counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod dd;
mod logvalue;
mod main4;
mod prediction;
pub mod special;
mod sums;

pub use dd::Dd;
pub use logvalue::{LogValue, Sign};
pub use main4::{main4_log, Main4};
pub use prediction::{l0_residual, l0_solve, Prediction};
pub use sums::{
    ln_rational, sigma_core_eval, sigma_core_exact, sigma_d_eval, sigma_d_exact_scaled, window, NuPolicy, SumEvaluation,
    SumMode, TauPolicy, DEFAULT_CUTOFF,
};

use special::ln_factorial_dd;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AsymptoticError {
    #[error("out of scope: {0}")]
    OutOfScope(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("inadmissible parameters: {0}")]
    Inadmissible(String),
}

/// Constants entering the asymptotic formulas. Those whose value is unknown
/// (`britikov_c`, `e_g`, `c_g`) default to 1 and are never asserted on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsymptoticContext {
    pub gamma_kernel: f64,
    pub phi: f64,
    pub britikov_c: f64,
    pub e_g: f64,
    pub c_g: f64,
    /// Any factor above 1; the excess window is `[l0 / factor, l0 · factor]`.
    pub excess_window_factor: f64,
    pub regime: RegimePolicy,
    /// Largest admissible `ζ (ln n)^{2/3} / n^{2/5}` in the second supercritical case.
    pub second_sup_guard: f64,
}

/// Names of the constants whose values are placeholders.
pub const UNKNOWN_CONSTANTS: [&str; 3] = ["britikov_c", "e_g", "c_g"];

/// `79^{3/4} / 54^{1/2}`.
pub fn gamma_kernel() -> f64 {
    79f64.powf(0.75) / 54f64.sqrt()
}

/// `2 √e γ² 3^{-3/2}`.
pub fn phi_constant() -> f64 {
    let g = gamma_kernel();
    2.0 * 0.5f64.exp() * g * g * 3f64.powf(-1.5)
}

impl Default for AsymptoticContext {
    fn default() -> Self {
        AsymptoticContext {
            gamma_kernel: gamma_kernel(),
            phi: phi_constant(),
            britikov_c: 1.0,
            e_g: 1.0,
            c_g: 1.0,
            excess_window_factor: 2.0,
            regime: RegimePolicy::default(),
            second_sup_guard: 0.1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    OneSub,
    OneCrit,
    OneSup,
    Int,
    TwoSub,
    TwoCrit,
    TwoSup,
}

/// Cutoffs turning "bounded" and "tending to infinity" into decisions for
/// concrete `(n, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegimePolicy {
    /// `|λ| < lambda_crit` is critical around `m = n/2`.
    pub lambda_crit: f64,
    /// `|ζ| < zeta_crit` is critical around `m = n`.
    pub zeta_crit: f64,
    /// Outside the critical windows, `α` within this distance of 1 or 2 belongs
    /// to the adjacent phase transition rather than the intermediate range.
    pub int_margin: f64,
}

impl Default for RegimePolicy {
    fn default() -> Self {
        RegimePolicy {
            lambda_crit: 10.0,
            zeta_crit: 10.0,
            int_margin: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeSpec {
    pub tag: RegimeTag,
    pub n: u64,
    pub m: u64,
    /// `(2m/n - 1) n^{1/3}`
    pub lambda: f64,
    /// `(2m/n - 2) n^{2/5}`
    pub zeta: f64,
    /// `2m/n`
    pub alpha: f64,
    pub g: u32,
    pub policy: RegimePolicy,
}

pub fn classify_regime(n: u64, m: u64, g: u32, policy: &RegimePolicy) -> Result<RegimeSpec, AsymptoticError> {
    if n == 0 {
        return Err(AsymptoticError::DomainError("n must be positive".into()));
    }
    if m > 2 * n {
        return Err(AsymptoticError::OutOfScope(format!("m = {m} exceeds 2n = {}", 2 * n)));
    }
    let nf = n as f64;
    let alpha = 2.0 * m as f64 / nf;
    let lambda = (2 * m as i128 - n as i128) as f64 / nf.powf(2.0 / 3.0);
    let zeta = (2 * m as i128 - 2 * n as i128) as f64 / nf.powf(0.6);
    // comparisons on α are made on integers: α ≤ 3/2, α - 1 ≤ margin, 2 - α ≤ margin
    let below_mid = 4 * m as u128 <= 3 * n as u128;
    let near_one = (2 * m as i128 - n as i128) as f64 <= policy.int_margin * nf;
    let near_two = (2 * n as i128 - 2 * m as i128) as f64 <= policy.int_margin * nf;
    let tag = if below_mid {
        if lambda <= -policy.lambda_crit {
            RegimeTag::OneSub
        } else if lambda.abs() < policy.lambda_crit {
            RegimeTag::OneCrit
        } else if near_one {
            RegimeTag::OneSup
        } else {
            RegimeTag::Int
        }
    } else if zeta >= policy.zeta_crit {
        RegimeTag::TwoSup
    } else if zeta > -policy.zeta_crit {
        RegimeTag::TwoCrit
    } else if near_two {
        RegimeTag::TwoSub
    } else {
        RegimeTag::Int
    };
    Ok(RegimeSpec {
        tag,
        n,
        m,
        lambda,
        zeta,
        alpha,
        g,
        policy: *policy,
    })
}

/// `ln f(n,m)` for `f = c (2/e)^{2m-n} m^{m+½} n^{n-2m+½} / (n-m)^{n-m+½}`.
pub fn britikov_f_log(n: u64, m: u64, ctx: &AsymptoticContext) -> Result<LogValue, AsymptoticError> {
    if m == 0 || m >= n {
        return Err(AsymptoticError::DomainError(format!("need 0 < m < n, got n = {n}, m = {m}")));
    }
    let (nd, md, rd) = (Dd::from_u128(n as u128), Dd::from_u128(m as u128), Dd::from_u128((n - m) as u128));
    let half = Dd::new(0.5);
    let excess = Dd::from_u128(2 * m as u128) - nd;
    let ln2m1 = dd::LN_2 - Dd::ONE;
    let value = Dd::new(ctx.britikov_c).ln() + excess * ln2m1 + (md + half) * md.ln() + (nd - md - md + half) * nd.ln()
        - (rd + half) * rd.ln();
    Ok(LogValue::from_ln(value))
}

/// `ln(e_g l^{5g/2 - 7/2} γ^{2l} (2l)!)`, the leading-order weighted count of
/// cubic kernels with excess `l`.
pub fn cubic_kernel_log(l: u64, g: u32, ctx: &AsymptoticContext) -> Result<LogValue, AsymptoticError> {
    if l == 0 {
        return Err(AsymptoticError::DomainError("excess must be positive".into()));
    }
    let lf = Dd::from_u128(l as u128);
    let power = 2.5 * g as f64 - 3.5;
    let value = Dd::new(ctx.e_g).ln()
        + lf.ln().mul_f64(power)
        + Dd::new(ctx.gamma_kernel).ln().mul_f64(2.0 * l as f64)
        + ln_factorial_dd(2 * l);
    Ok(LogValue::from_ln(value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(n: u64, m: u64) -> RegimeSpec {
        classify_regime(n, m, 0, &RegimePolicy::default()).unwrap()
    }

    #[test]
    fn constants() {
        assert!((gamma_kernel() - 3.606).abs() < 5e-4);
        assert!((phi_constant() - 8.2516772250832889).abs() < 1e-12);
    }

    #[test]
    fn regimes() {
        let r = classify(1_000_000, 500_000);
        assert_eq!((r.tag, r.lambda), (RegimeTag::OneCrit, 0.0));
        let r = classify(1_000_000, 550_000);
        assert_eq!(r.tag, RegimeTag::OneSup);
        assert!((r.lambda - 10.0).abs() < 1e-9);
        let r = classify(10_000_000_000, 10_000_000_000);
        assert_eq!((r.tag, r.zeta), (RegimeTag::TwoCrit, 0.0));
        assert_eq!(classify(1_000_000, 750_000).tag, RegimeTag::Int);
        assert_eq!(classify(1_000_000, 300_000).tag, RegimeTag::OneSub);
        assert_eq!(classify(1_000_000, 960_000).tag, RegimeTag::TwoSub);
        assert_eq!(classify(1_000_000, 1_100_000).tag, RegimeTag::TwoSup);
        assert!(matches!(
            classify_regime(10, 21, 0, &RegimePolicy::default()),
            Err(AsymptoticError::OutOfScope(_))
        ));
    }

    #[test]
    fn first_supercritical_boundary_uses_the_literal_definitions() {
        // α = 1 + n^{-1/4}: λ = n^{1/12}, above the cutoff once n ≥ 10^12
        let n: u64 = 10_000_000_000_000;
        let m = ((1.0 + (n as f64).powf(-0.25)) * n as f64 / 2.0).round() as u64;
        let r = classify(n, m);
        assert_eq!(r.tag, RegimeTag::OneSup);
        assert!((r.lambda - (n as f64).powf(1.0 / 12.0)).abs() < 1e-3);
        assert!((r.alpha - 2.0 * m as f64 / n as f64).abs() < 1e-15);
    }

    #[test]
    fn britikov_values() {
        let ctx = AsymptoticContext::default();
        let f = britikov_f_log(4, 3, &ctx).unwrap().to_f64();
        assert!((f - 3.16450241940426).abs() < 1e-12, "{f}");
        assert!(britikov_f_log(4, 4, &ctx).is_err());
        // same quantity with the exponents grouped differently
        for (n, m) in [(7u64, 5u64), (1000, 700), (1_000_000_000, 600_000_000)] {
            let (nf, mf) = (n as f64, m as f64);
            let alt = (2.0 * mf - nf) * (2f64.ln() - 1.0) + mf * (mf / nf).ln() + 0.5 * mf.ln()
                - (nf - mf + 0.5) * ((nf - mf) / nf).ln();
            let ours = britikov_f_log(n, m, &ctx).unwrap().ln_f64();
            assert!((ours - alt).abs() <= 1e-12 * ours.abs().max(1.0), "{n} {m}: {ours} {alt}");
        }
    }

    #[test]
    fn cubic_kernel_values() {
        let ctx = AsymptoticContext::default();
        let one = cubic_kernel_log(1, 0, &ctx).unwrap().ln_f64();
        assert!((one - (2.0 * gamma_kernel().powi(2)).ln()).abs() < 1e-14);
        // consecutive ratios follow γ²(2l+2)(2l+1)((l+1)/l)^{5g/2-7/2}
        for g in 0..=2u32 {
            for l in [1u64, 10, 100, 1000] {
                let a = cubic_kernel_log(l, g, &ctx).unwrap().log_magnitude;
                let b = cubic_kernel_log(l + 1, g, &ctx).unwrap().log_magnitude;
                let lf = l as f64;
                let expected = 2.0 * gamma_kernel().ln()
                    + ((2.0 * lf + 2.0) * (2.0 * lf + 1.0)).ln()
                    + (2.5 * g as f64 - 3.5) * (1.0 / lf).ln_1p();
                assert!(((b - a).to_f64() - expected).abs() < 1e-9, "g {g} l {l}");
            }
        }
    }
}
