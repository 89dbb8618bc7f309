use serde::{Deserialize, Serialize};

use super::{classify_regime, AsymptoticContext, AsymptoticError, RegimeSpec, RegimeTag};
use crate::decompose::DecompositionCounts;

/// Typical structure of a graph with `n` vertices and `m` edges on the surface,
/// centred at the excess fixed point `l0`. Derived sizes use `l0` and deficiency 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub regime: RegimeSpec,
    pub l0: f64,
    pub l1: u64,
    pub residual: f64,
    #[serde(rename = "n_C")]
    pub n_complex: f64,
    #[serde(rename = "n_U")]
    pub n_noncomplex: f64,
    #[serde(rename = "m_U")]
    pub m_noncomplex: f64,
    pub n_core: f64,
    #[serde(rename = "n_K")]
    pub n_kernel: f64,
    #[serde(rename = "m_K")]
    pub m_kernel: f64,
    /// Order of the number of vertices outside the largest component, defined
    /// around `m = n`.
    pub outside_order: Option<f64>,
    pub excess_window: (f64, f64),
}

/// `l - φ^{2/3}(2m - n - 2l) / (e^{1/3} 2^{4/3} (n - m + l)^{2/3})`, increasing in `l`.
pub fn l0_residual(n: u64, m: u64, l: f64, ctx: &AsymptoticContext) -> f64 {
    let scale = ctx.phi.powf(2.0 / 3.0) / ((1.0f64 / 3.0).exp() * 2f64.powf(4.0 / 3.0));
    let excess_room = (2 * m as i128 - n as i128) as f64 - 2.0 * l;
    let outside = (n as i128 - m as i128) as f64 + l;
    l - scale * excess_room / outside.powf(2.0 / 3.0)
}

/// Bisection for the fixed point on `(max(0, m - n), m - n/2)`.
pub fn l0_solve(n: u64, m: u64, g: u32, ctx: &AsymptoticContext) -> Result<Prediction, AsymptoticError> {
    let regime = classify_regime(n, m, g, &ctx.regime)?;
    let mut lo = (m as f64 - n as f64).max(0.0);
    let mut hi = m as f64 - n as f64 / 2.0;
    if hi <= lo {
        return Err(AsymptoticError::NoRoot(format!(
            "empty bracket ({lo}, {hi}) for n = {n}, m = {m}"
        )));
    }
    let f = |l: f64| l0_residual(n, m, l, ctx);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let l0 = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    let residual = f(l0);
    if !residual.is_finite() || residual.abs() >= 1e-10 * l0.max(1.0) {
        return Err(AsymptoticError::NoRoot(format!(
            "residual {residual} at l = {l0} for n = {n}, m = {m}"
        )));
    }
    let nf = n as f64;
    let n_complex = (2 * m as i128 - n as i128) as f64 - 2.0 * l0;
    let m_noncomplex = (n as i128 - m as i128) as f64 + l0;
    let outside_order = match regime.tag {
        RegimeTag::TwoSub => Some(regime.zeta.abs() * nf.powf(0.6)),
        RegimeTag::TwoCrit => Some(nf.powf(0.6)),
        RegimeTag::TwoSup => Some(regime.zeta.powf(-1.5) * nf.powf(0.6)),
        _ => None,
    };
    let c = ctx.excess_window_factor;
    Ok(Prediction {
        regime,
        l0,
        l1: l0.ceil() as u64,
        residual,
        n_complex,
        n_noncomplex: 2.0 * m_noncomplex,
        m_noncomplex,
        n_core: (n_complex * 3.0 * l0).sqrt(),
        n_kernel: 2.0 * l0,
        m_kernel: 3.0 * l0,
        outside_order,
        excess_window: (l0 / c, l0 * c),
    })
}

impl Prediction {
    /// Integer structure at excess `l1` with deficiency 0.
    pub fn rounded_counts(&self) -> DecompositionCounts {
        let (n, m, l) = (self.regime.n, self.regime.m, self.l1);
        let n_complex = (2 * m).saturating_sub(n + 2 * l);
        let n_core = ((n_complex as f64 * 3.0 * l as f64).sqrt().round() as u64).min(n_complex);
        DecompositionCounts {
            n,
            m,
            n_complex,
            n_noncomplex: n - n_complex,
            m_noncomplex: m - n_complex - l,
            n_core,
            n_kernel: 2 * l,
            m_kernel: 3 * l,
            excess: l,
            deficiency: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::admissibility_violations;

    fn l0(n: u64, m: u64) -> f64 {
        l0_solve(n, m, 0, &AsymptoticContext::default()).unwrap().l0
    }

    fn round_m(n: u64, zeta: f64) -> u64 {
        ((2.0 + zeta * (n as f64).powf(-0.4)) * n as f64 / 2.0).round() as u64
    }

    #[test]
    fn fixed_point_matches_reference_values() {
        // 50-digit reference solutions of the same equation
        let cases = [
            (1_000_000u64, 750_000u64, 1.461538123010616 * 1e6f64.cbrt()),
            (100_000_000, 75_000_000, 1.4628967392142893 * 1e8f64.cbrt()),
        ];
        for (n, m, expected) in cases {
            let got = l0(n, m);
            assert!((got - expected).abs() < 1e-9 * expected, "{n}: {got} vs {expected}");
        }
    }

    #[test]
    fn order_of_the_fixed_point_is_stable() {
        let mut int = Vec::new();
        let mut sub = Vec::new();
        let mut sup = Vec::new();
        for n in [1_000_000u64, 100_000_000, 10_000_000_000] {
            let nf = n as f64;
            int.push(l0(n, 3 * n / 4) / nf.cbrt());
            let m = round_m(n, -nf.powf(0.2));
            let p = l0_solve(n, m, 0, &AsymptoticContext::default()).unwrap();
            sub.push(p.l0 * p.regime.zeta.abs().powf(2.0 / 3.0) / nf.powf(0.6));
            let m = round_m(n, nf.powf(0.2));
            let p = l0_solve(n, m, 0, &AsymptoticContext::default()).unwrap();
            let z = p.regime.zeta;
            sup.push((p.l0 - z * nf.powf(0.6) / 2.0) * z.powf(1.5) / nf.powf(0.6));
        }
        // reference ratios from a 50-digit solve
        let expected = [
            [1.461538123010616, 1.4628967392142893, 1.4629598889377655],
            [1.6853365396093056, 1.7873961811706634, 1.822698987518999],
            [3.49984064015252, 3.5351512271619070, 3.5386159393382827],
        ];
        for (got, want) in [&int, &sub, &sup].iter().zip(expected) {
            for (g, w) in got.iter().zip(want) {
                assert!((g - w).abs() < 1e-6 * w, "{g} vs {w}");
            }
            let max = got.iter().cloned().fold(f64::MIN, f64::max);
            let min = got.iter().cloned().fold(f64::MAX, f64::min);
            assert!(max / min < 1.1);
        }
    }

    #[test]
    fn prediction_lies_in_the_bracket_and_rounds_to_an_admissible_structure() {
        let ctx = AsymptoticContext::default();
        for (n, m) in [(1000u64, 600u64), (1000, 999), (1000, 1200), (1_000_000, 750_000)] {
            let p = l0_solve(n, m, 0, &ctx).unwrap();
            assert!((m as f64 - n as f64) < p.l0 && p.l0 < m as f64 - n as f64 / 2.0);
            assert!(p.residual.abs() < 1e-10 * p.l0.max(1.0));
            for v in [p.n_complex, p.n_noncomplex, p.m_noncomplex, p.n_core, p.n_kernel, p.m_kernel] {
                assert!(v >= 0.0);
            }
            assert!(admissibility_violations(&p.rounded_counts(), 0).is_empty(), "{n} {m}");
        }
        assert!(matches!(l0_solve(100, 50, 0, &ctx), Err(AsymptoticError::NoRoot(_))));
    }
}
