use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::special::{ln_binomial, ln_factorial, ln_falling, ln_falling_ratio};
use super::{AsymptoticError, LogValue};

/// Terms smaller than `e^{-DEFAULT_CUTOFF}` times the largest one are dropped
/// by truncated evaluation.
pub const DEFAULT_CUTOFF: f64 = 46.0;

const CHUNK: u64 = 1 << 14;

/// Offset in the subdivision-count bracket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NuPolicy {
    /// ν = -5
    Lower,
    /// ν = 1
    Upper,
    Fixed(f64),
}

impl NuPolicy {
    pub fn value(self) -> f64 {
        match self {
            NuPolicy::Lower => -5.0,
            NuPolicy::Upper => 1.0,
            NuPolicy::Fixed(x) => x,
        }
    }
}

/// Per-unit deficiency factor of the kernel-class ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauPolicy {
    /// τ = 1/216
    Lower,
    /// τ = 6
    Upper,
    Fixed(f64),
}

impl TauPolicy {
    pub fn value(self) -> f64 {
        match self {
            TauPolicy::Lower => 1.0 / 216.0,
            TauPolicy::Upper => 6.0,
            TauPolicy::Fixed(x) => x,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumMode {
    /// Every index in the range.
    Full,
    /// Outward from the largest term until terms fall below `e^{-cutoff}` of it;
    /// relies on the terms being unimodal in the index.
    Truncated { cutoff: f64 },
}

impl Default for SumMode {
    fn default() -> Self {
        SumMode::Truncated { cutoff: DEFAULT_CUTOFF }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumEvaluation {
    /// Index of `log_terms[0]`.
    pub first_index: u64,
    /// Natural logs of the evaluated terms, `-inf` for zero terms.
    pub log_terms: Vec<f64>,
    pub total: LogValue,
    /// `ln(total) - ln(normalisation)`, the residual exponent of the sum.
    pub residual_exponent: f64,
    pub argmax: u64,
    pub truncated: bool,
}

impl SumEvaluation {
    fn from_terms(first_index: u64, log_terms: Vec<f64>, truncated: bool, normalisation: f64) -> Self {
        let total = LogValue::sum_ln(&log_terms);
        let (pos, _) = log_terms
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        SumEvaluation {
            first_index,
            residual_exponent: total.ln_f64() - normalisation,
            argmax: first_index + pos as u64,
            log_terms,
            total,
            truncated,
        }
    }

    pub fn last_index(&self) -> u64 {
        self.first_index + self.log_terms.len() as u64 - 1
    }

    /// Fraction of the evaluated total carried by indices in `lo..=hi`.
    pub fn mass(&self, lo: u64, hi: u64) -> f64 {
        let top = self.total.ln_f64();
        self.log_terms
            .iter()
            .enumerate()
            .filter(|(i, _)| (lo..=hi).contains(&(self.first_index + *i as u64)))
            .map(|(_, &t)| (t - top).exp())
            .sum()
    }
}

fn ln_term_core(n_c: u64, l: u64, d: u64, nu: f64, k: u64) -> f64 {
    let falling = 3 * l - d - 1;
    let x = k as f64 + nu * l as f64 - 1.0;
    match (ln_falling_ratio(n_c as f64, k), ln_falling(x, falling)) {
        (Some(a), Some(b)) => a + (k as f64).ln() + b,
        _ => f64::NEG_INFINITY,
    }
}

/// Largest-term search over a unimodal sequence; a prefix of `-inf` terms is allowed.
fn argmax_unimodal(lo: u64, hi: u64, f: &mut dyn FnMut(u64) -> f64) -> u64 {
    let (mut a, mut b) = (lo, hi);
    // smallest k with f(k+1) < f(k), or hi
    while a < b {
        let mid = a + (b - a) / 2;
        let (x, y) = (f(mid), f(mid + 1));
        if y < x {
            b = mid;
        } else {
            a = mid + 1;
        }
    }
    a
}

/// Evaluates `f` on `lo..=hi`, either everywhere or outward from the peak.
fn collect_terms(
    lo: u64,
    hi: u64,
    mode: SumMode,
    f: &(dyn Fn(u64) -> f64 + Sync),
) -> (u64, Vec<f64>, bool) {
    match mode {
        SumMode::Full => {
            let chunks: Vec<Vec<f64>> = (0..=(hi - lo) / CHUNK)
                .into_par_iter()
                .map(|c| {
                    let start = lo + c * CHUNK;
                    let end = (start + CHUNK - 1).min(hi);
                    (start..=end).map(f).collect()
                })
                .collect();
            (lo, chunks.concat(), false)
        }
        SumMode::Truncated { cutoff } => {
            let mut cache: HashMap<u64, f64> = HashMap::new();
            let mut eval = |k: u64| *cache.entry(k).or_insert_with(|| f(k));
            let peak = argmax_unimodal(lo, hi, &mut eval);
            let top = eval(peak);
            if top == f64::NEG_INFINITY {
                return (peak, vec![top], true);
            }
            let mut left = peak;
            while left > lo && eval(left - 1) >= top - cutoff {
                left -= 1;
            }
            let mut right = peak;
            while right < hi && eval(right + 1) >= top - cutoff {
                right += 1;
            }
            let terms = (left..=right).map(&mut eval).collect();
            (left, terms, left > lo || right < hi)
        }
    }
}

fn check_core(n_c: u64, l: u64, d: u64) -> Result<(u64, u64), AsymptoticError> {
    if n_c == 0 || l == 0 || d > 2 * l {
        return Err(AsymptoticError::Inadmissible(format!("n_C = {n_c}, l = {l}, d = {d}")));
    }
    let lo = (2 * l - d).max(1);
    if lo > n_c {
        return Err(AsymptoticError::Inadmissible(format!(
            "no core order between {lo} and n_C = {n_c}"
        )));
    }
    Ok((lo, n_c))
}

/// `Σ_core = Σ_{n_core} (n_C)_{n_core} / n_C^{n_core} · n_core · (n_core + νl - 1)_{3l-d-1}`
/// over `max(1, 2l - d) ≤ n_core ≤ n_C`, with the residual exponent
/// `ln Σ_core - ln(√n_C (n_C(3l-d)/e)^{(3l-d)/2})`.
pub fn sigma_core_eval(n_c: u64, l: u64, d: u64, nu: NuPolicy, mode: SumMode) -> Result<SumEvaluation, AsymptoticError> {
    let (lo, hi) = check_core(n_c, l, d)?;
    let nu = nu.value();
    let (first, terms, truncated) = collect_terms(lo, hi, mode, &|k| ln_term_core(n_c, l, d, nu, k));
    let kernel_edges = (3 * l - d) as f64;
    let nf = n_c as f64;
    let normalisation = 0.5 * nf.ln() + kernel_edges / 2.0 * ((nf * kernel_edges).ln() - 1.0);
    let eval = SumEvaluation::from_terms(first, terms, truncated, normalisation);
    if eval.total.is_zero() {
        return Err(AsymptoticError::Inadmissible(format!(
            "every term vanishes for n_C = {n_c}, l = {l}, d = {d}, ν = {nu}"
        )));
    }
    Ok(eval)
}

/// `Σ_d = Σ_d C(2l,d) (3l-d)^{(3l-d+2)/2} e^{d/2} τ^d / ((3l-d)! n_C^{d/2}) · exp(f_core(d))`
/// over `0 ≤ d ≤ 2l`, with residual exponent `ln Σ_d - ln((3l)^{-(3l-1)/2} e^{3l})`.
pub fn sigma_d_eval(
    n_c: u64,
    l: u64,
    tau: TauPolicy,
    nu: NuPolicy,
    mode: SumMode,
) -> Result<SumEvaluation, AsymptoticError> {
    if n_c == 0 || l == 0 {
        return Err(AsymptoticError::Inadmissible(format!("n_C = {n_c}, l = {l}")));
    }
    let ln_tau = tau.value().ln();
    let nf = n_c as f64;
    let term = |d: u64| -> f64 {
        let core = match sigma_core_eval(n_c, l, d, nu, mode) {
            Ok(c) => c.residual_exponent,
            Err(_) => return f64::NEG_INFINITY,
        };
        let e = (3 * l - d) as f64;
        let tau_part = if d == 0 { 0.0 } else { d as f64 * ln_tau };
        ln_binomial((2 * l) as f64, d).unwrap_or(f64::NEG_INFINITY) + (e + 2.0) / 2.0 * e.ln() + d as f64 / 2.0
            + tau_part
            - ln_factorial(3 * l - d)
            - d as f64 / 2.0 * nf.ln()
            + core
    };
    let (first, terms, truncated) = collect_terms(0, 2 * l, mode, &term);
    let three_l = (3 * l) as f64;
    let normalisation = -(three_l - 1.0) / 2.0 * three_l.ln() + three_l;
    let eval = SumEvaluation::from_terms(first, terms, truncated, normalisation);
    if eval.total.is_zero() {
        return Err(AsymptoticError::Inadmissible(format!("every term vanishes for n_C = {n_c}, l = {l}")));
    }
    Ok(eval)
}

/// Smallest contiguous index interval containing the largest term whose share
/// of the evaluated total is at least `mass`; ties go to the leftmost interval.
pub fn window(eval: &SumEvaluation, mass: f64) -> (u64, u64) {
    assert!(mass > 0.0 && mass < 1.0, "mass must lie strictly between 0 and 1");
    let top = eval.log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = eval.log_terms.iter().map(|&t| (t - top).exp()).collect();
    let mut prefix = Vec::with_capacity(weights.len() + 1);
    prefix.push(0.0);
    for w in &weights {
        prefix.push(prefix.last().unwrap() + w);
    }
    let total = *prefix.last().unwrap();
    let target = mass * total;
    let a = (eval.argmax - eval.first_index) as usize;
    let n = weights.len();
    let mut best: Option<(usize, usize)> = None;
    let mut right = n - 1;
    for left in (0..=a).rev() {
        if prefix[right + 1] - prefix[left] < target {
            continue;
        }
        while right > a && prefix[right] - prefix[left] >= target {
            right -= 1;
        }
        let better = match best {
            None => true,
            Some((bl, br)) => right - left < br - bl || (right - left == br - bl && left < bl),
        };
        if better {
            best = Some((left, right));
        }
    }
    let (l, r) = best.unwrap_or((0, n - 1));
    (eval.first_index + l as u64, eval.first_index + r as u64)
}

fn falling_int(x: i64, k: u64) -> BigInt {
    if k == 0 {
        return BigInt::one();
    }
    if x < k as i64 {
        return BigInt::zero();
    }
    (0..k as i64).fold(BigInt::one(), |acc, i| acc * BigInt::from(x - i))
}

/// Exact `Σ_core` for integer ν.
pub fn sigma_core_exact(n_c: u64, l: u64, d: u64, nu: i64) -> Result<BigRational, AsymptoticError> {
    let (lo, hi) = check_core(n_c, l, d)?;
    let falling = 3 * l - d - 1;
    let mut ratio = BigRational::one();
    let nc = BigInt::from(n_c);
    let mut total = BigRational::zero();
    for k in 1..=hi {
        ratio = ratio * BigRational::new(BigInt::from(n_c - k + 1), nc.clone());
        if k < lo {
            continue;
        }
        let x = k as i64 + nu * l as i64 - 1;
        let term = falling_int(x, falling) * BigInt::from(k);
        total += &ratio * BigRational::from_integer(term);
    }
    Ok(total)
}

/// Exact `R = Σ_d C(2l,d) (3l-d) τ^d Σ_core(d) / (3l-d)!`, from which
/// `Σ_d = e^{3l/2} n_C^{-(3l+1)/2} R`. Deficiencies with an empty core range
/// contribute zero.
pub fn sigma_d_exact_scaled(n_c: u64, l: u64, tau: &BigRational, nu: i64) -> Result<BigRational, AsymptoticError> {
    if n_c == 0 || l == 0 {
        return Err(AsymptoticError::Inadmissible(format!("n_C = {n_c}, l = {l}")));
    }
    let mut total = BigRational::zero();
    let mut tau_power = BigRational::one();
    for d in 0..=2 * l {
        if let Ok(core) = sigma_core_exact(n_c, l, d, nu) {
            let e = 3 * l - d;
            let coeff = BigInt::from(binomial(2 * l, d)) * BigInt::from(e);
            let fact: BigInt = (1..=e).map(BigInt::from).product();
            total += BigRational::new(coeff, fact) * &tau_power * core;
        }
        tau_power = tau_power * tau;
    }
    Ok(total)
}

fn binomial(n: u64, k: u64) -> BigUint {
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// Natural log of a positive rational of any size.
pub fn ln_rational(x: &BigRational) -> f64 {
    assert!(x.is_positive(), "log of a non-positive rational");
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

fn ln_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits").ln();
    }
    let shift = bits - 900;
    let top: BigInt = x >> shift;
    top.to_f64().expect("fits").ln() + shift as f64 * std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1.0)
    }

    #[test]
    fn core_sum_matches_exact_summation() {
        for (n_c, l, d, nu) in [(10u64, 1u64, 0u64, 1i64), (10, 2, 1, 1), (50, 3, 2, 1), (50, 10, 0, 1), (40, 2, 0, -5)] {
            let exact = sigma_core_exact(n_c, l, d, nu).unwrap();
            let policy = if nu == 1 { NuPolicy::Upper } else { NuPolicy::Lower };
            for mode in [SumMode::Full, SumMode::default()] {
                let eval = sigma_core_eval(n_c, l, d, policy, mode).unwrap();
                assert!(
                    close(eval.total.ln_f64(), ln_rational(&exact), 1e-12),
                    "{n_c} {l} {d}: {} vs {}",
                    eval.total.ln_f64(),
                    ln_rational(&exact)
                );
            }
        }
    }

    #[test]
    fn small_core_sum_by_hand() {
        // n_C = 3, l = 1, d = 2: terms k (3)_k/3^k (k)_0 for k = 1..3
        let exact = sigma_core_exact(3, 1, 2, 1).unwrap();
        let expected = BigRational::new(1.into(), 1.into())
            + BigRational::new(4.into(), 3.into())
            + BigRational::new(2.into(), 3.into());
        assert_eq!(exact, expected);
    }

    #[test]
    fn deficiency_sum_matches_exact_summation() {
        for (n_c, l, tau) in [(1000u64, 1u64, TauPolicy::Upper), (30, 3, TauPolicy::Lower), (200, 4, TauPolicy::Fixed(2.0))] {
            let t = tau.value();
            let tau_exact = BigRational::from_float(t).unwrap();
            let scaled = sigma_d_exact_scaled(n_c, l, &tau_exact, 1).unwrap();
            let three_l = (3 * l) as f64;
            let expected = 1.5 * l as f64 - (three_l + 1.0) / 2.0 * (n_c as f64).ln() + ln_rational(&scaled);
            for mode in [SumMode::Full, SumMode::default()] {
                let eval = sigma_d_eval(n_c, l, tau, NuPolicy::Upper, mode).unwrap();
                assert!(close(eval.total.ln_f64(), expected, 1e-11), "{n_c} {l}: {} vs {expected}", eval.total.ln_f64());
            }
        }
    }

    #[test]
    fn truncation_agrees_with_full_summation() {
        let full = sigma_core_eval(100_000, 100, 3, NuPolicy::Upper, SumMode::Full).unwrap();
        let cut = sigma_core_eval(100_000, 100, 3, NuPolicy::Upper, SumMode::default()).unwrap();
        assert!(cut.truncated && !full.truncated);
        assert_eq!(full.argmax, cut.argmax);
        assert!(close(full.total.ln_f64(), cut.total.ln_f64(), 1e-14));
    }

    fn synthetic(logs: Vec<f64>) -> SumEvaluation {
        SumEvaluation::from_terms(10, logs, false, 0.0)
    }

    #[test]
    fn windows() {
        let point = synthetic(vec![f64::NEG_INFINITY, 0.0, f64::NEG_INFINITY]);
        assert_eq!(window(&point, 0.99), (11, 11));
        let geometric: Vec<f64> = (-20i32..=20).map(|i| -(i.abs() as f64)).collect();
        let eval = synthetic(geometric);
        let (lo, hi) = window(&eval, 0.9);
        assert_eq!(lo + hi, 2 * eval.argmax);
        assert!(eval.mass(lo, hi) >= 0.9);
        assert!(eval.mass(lo + 1, hi) < 0.9);
        let (lo2, hi2) = window(&eval, 0.99);
        assert!(lo2 <= lo && hi <= hi2);
    }

    #[test]
    fn inadmissible_parameters() {
        assert!(sigma_core_eval(0, 1, 0, NuPolicy::Upper, SumMode::Full).is_err());
        assert!(sigma_core_eval(3, 2, 0, NuPolicy::Upper, SumMode::Full).is_err());
        assert!(sigma_core_eval(10, 1, 3, NuPolicy::Upper, SumMode::Full).is_err());
        assert!(sigma_d_eval(10, 0, TauPolicy::Upper, NuPolicy::Upper, SumMode::Full).is_err());
    }
}
