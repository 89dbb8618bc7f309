//! Exact counts of the graph classes by brute force, the non-complex count by a
//! component recurrence, and exact checks of the decomposition identities.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::{phi_kernel, WeightedKernel};
use crate::genus::{GenusError, GenusOracle};
use crate::graph::{Label, LabeledGraph, LabeledMultigraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassTag {
    /// All graphs embeddable on the surface.
    General,
    /// Embeddable graphs all of whose components are complex.
    Complex,
    /// Complex embeddable graphs of minimum degree at least two.
    Core,
    /// Embeddable multigraphs of minimum degree at least three, weighted.
    Kernel,
    /// Graphs whose components are trees or unicyclic.
    NonComplex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassQuery {
    pub class: ClassTag,
    pub n: u32,
    pub m: u32,
    pub g: u32,
}

/// Largest parameters for which brute force is attempted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub simple_max_n: u32,
    pub kernel_max_n: u32,
    pub kernel_max_m: u32,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            simple_max_n: 7,
            kernel_max_n: 4,
            kernel_max_m: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Count {
    Exact(BigUint),
    Weighted(BigRational),
}

impl Count {
    pub fn to_rational(&self) -> BigRational {
        match self {
            Count::Exact(c) => BigRational::from_integer(BigInt::from(c.clone())),
            Count::Weighted(w) => w.clone(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnumError {
    #[error("{what} exceeds the brute-force cap ({limit})")]
    CapExceeded { what: String, limit: u32 },
    #[error(transparent)]
    Genus(#[from] GenusError),
    #[error("identity {} fails at {:?}: lhs {} rhs {}", .0.identity, .0.params, .0.lhs, .0.rhs)]
    IdentityViolation(Box<IdentityReport>),
    #[error("right-hand side {0} is not an integer")]
    NonIntegralResult(BigRational),
    #[error("bound violated: {0}")]
    BoundViolation(String),
}

/// Both sides of an identity together with the individual right-hand terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity: String,
    pub params: Vec<(String, u64)>,
    pub lhs: BigRational,
    pub rhs: BigRational,
    pub terms: Vec<IdentityTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentityTerm {
    pub index: Vec<(String, u64)>,
    pub value: BigRational,
}

impl IdentityReport {
    pub fn holds(&self) -> bool {
        self.lhs == self.rhs
    }
}

/// Brute-force counter with memoized class counts, kernel classes and genus values.
pub struct Enumerator {
    caps: Caps,
    oracle: GenusOracle,
    simple_counts: Mutex<HashMap<ClassQuery, BigUint>>,
    kernels: Mutex<HashMap<(u32, u32, u32, Option<u32>), Arc<Vec<WeightedKernel>>>>,
    genus_tables: Mutex<HashMap<u32, Arc<Vec<u8>>>>,
}

/// Orders up to which the genus of every edge mask is tabulated once.
const GENUS_TABLE_MAX_PAIRS: u32 = 21;

impl Default for Enumerator {
    fn default() -> Self {
        Enumerator::new(Caps::default())
    }
}

fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn pair_count(n: u32) -> u32 {
    n * n.saturating_sub(1) / 2
}

/// Pair index ↔ endpoints in colexicographic order: (0,1), (0,2), (1,2), (0,3), …
fn pairs(n: u32) -> Vec<(u8, u8)> {
    let mut out = Vec::new();
    for v in 1..n {
        for u in 0..v {
            out.push((u as u8, v as u8));
        }
    }
    out
}

/// Next bit set with the same popcount (Gosper).
fn next_subset(x: u64) -> u64 {
    let c = x & x.wrapping_neg();
    let r = x + c;
    (((r ^ x) >> 2) / c) | r
}

/// Structure of a small graph given as an edge mask.
struct MaskShape {
    all_complex: bool,
    none_complex: bool,
    min_degree: u32,
}

fn shape(n: u32, mask: u64, pair_list: &[(u8, u8)]) -> MaskShape {
    let mut adj = [0u16; 16];
    let mut deg = [0u32; 16];
    let mut bits = mask;
    while bits != 0 {
        let k = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let (u, v) = pair_list[k];
        adj[u as usize] |= 1 << v;
        adj[v as usize] |= 1 << u;
        deg[u as usize] += 1;
        deg[v as usize] += 1;
    }
    let mut seen: u16 = 0;
    let mut all_complex = true;
    let mut none_complex = true;
    for s in 0..n as usize {
        if seen >> s & 1 == 1 {
            continue;
        }
        let mut comp: u16 = 1 << s;
        let mut frontier: u16 = comp;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = adj[v] & !comp;
            comp |= fresh;
            frontier |= fresh;
        }
        seen |= comp;
        let order = comp.count_ones();
        let twice_edges: u32 = (0..n as usize)
            .filter(|&v| comp >> v & 1 == 1)
            .map(|v| deg[v])
            .sum();
        let edges = twice_edges / 2;
        if edges > order {
            none_complex = false;
        } else {
            all_complex = false;
        }
    }
    MaskShape {
        all_complex,
        none_complex,
        min_degree: (0..n as usize).map(|v| deg[v]).min().unwrap_or(0),
    }
}

fn mask_graph(n: u32, mask: u64, pair_list: &[(u8, u8)]) -> LabeledGraph {
    let mut edges = Vec::with_capacity(mask.count_ones() as usize);
    let mut bits = mask;
    while bits != 0 {
        let k = bits.trailing_zeros() as usize;
        bits &= bits - 1;
        let (u, v) = pair_list[k];
        edges.push((u as Label + 1, v as Label + 1));
    }
    LabeledGraph::new(n, edges).expect("pairs are distinct")
}

impl Enumerator {
    pub fn new(caps: Caps) -> Self {
        Enumerator {
            caps,
            oracle: GenusOracle::default(),
            simple_counts: Mutex::new(HashMap::new()),
            kernels: Mutex::new(HashMap::new()),
            genus_tables: Mutex::new(HashMap::new()),
        }
    }

    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn oracle(&self) -> &GenusOracle {
        &self.oracle
    }

    pub fn brute_count(&self, q: ClassQuery) -> Result<Count, EnumError> {
        match q.class {
            ClassTag::Kernel => {
                let class = self.kernel_class(q.n, q.m, q.g)?;
                Ok(Count::Weighted(
                    class.iter().map(|k| k.weight.clone()).fold(BigRational::zero(), |a, b| a + b),
                ))
            }
            _ => Ok(Count::Exact(self.simple_count(q)?)),
        }
    }

    fn simple_count(&self, q: ClassQuery) -> Result<BigUint, EnumError> {
        if q.n > self.caps.simple_max_n {
            return Err(EnumError::CapExceeded {
                what: format!("n = {}", q.n),
                limit: self.caps.simple_max_n,
            });
        }
        if let Some(c) = self.simple_counts.lock().expect("lock").get(&q) {
            return Ok(c.clone());
        }
        let count = self.count_masks(q)?;
        self.simple_counts
            .lock()
            .expect("lock")
            .insert(q, count.clone());
        Ok(count)
    }

    fn count_masks(&self, q: ClassQuery) -> Result<BigUint, EnumError> {
        let n = q.n;
        let big_n = pair_count(n);
        if q.m > big_n {
            return Ok(BigUint::zero());
        }
        if q.m == 0 {
            let ok = match q.class {
                ClassTag::General | ClassTag::NonComplex => true,
                // only the empty graph on no vertices has every component complex
                ClassTag::Complex | ClassTag::Core => n == 0,
                ClassTag::Kernel => unreachable!(),
            };
            return Ok(BigUint::from(u8::from(ok)));
        }
        let pair_list = pairs(n);
        let table = if big_n <= GENUS_TABLE_MAX_PAIRS && q.class != ClassTag::NonComplex {
            Some(self.genus_table(n, &pair_list)?)
        } else {
            None
        };
        let table = table.as_deref().map(|t| t.as_slice());
        // subsets grouped by their largest pair index
        let counts: Result<Vec<u64>, EnumError> = ((q.m - 1)..big_n)
            .into_par_iter()
            .map(|top| {
                let rest = q.m - 1;
                let high = 1u64 << top;
                let mut total = 0u64;
                if rest == 0 {
                    total += u64::from(self.accepts(q, high, &pair_list, table)?);
                    return Ok(total);
                }
                let mut x: u64 = (1u64 << rest) - 1;
                while x < high {
                    total += u64::from(self.accepts(q, x | high, &pair_list, table)?);
                    x = next_subset(x);
                }
                Ok(total)
            })
            .collect();
        Ok(counts?.into_iter().map(BigUint::from).sum())
    }

    /// Genus of every graph on `n` vertices, indexed by edge mask.
    fn genus_table(&self, n: u32, pair_list: &[(u8, u8)]) -> Result<Arc<Vec<u8>>, EnumError> {
        if let Some(t) = self.genus_tables.lock().expect("lock").get(&n) {
            return Ok(t.clone());
        }
        let size = 1usize << pair_count(n);
        let chunk = 1usize << 12;
        let parts: Result<Vec<Vec<u8>>, EnumError> = (0..size.div_ceil(chunk))
            .into_par_iter()
            .map(|c| {
                (c * chunk..((c + 1) * chunk).min(size))
                    .map(|mask| {
                        let g = mask_graph(n, mask as u64, pair_list);
                        Ok(self.oracle.genus(&g.to_multigraph())? as u8)
                    })
                    .collect()
            })
            .collect();
        let table = Arc::new(parts?.concat());
        self.genus_tables
            .lock()
            .expect("lock")
            .insert(n, table.clone());
        Ok(table)
    }

    fn accepts(
        &self,
        q: ClassQuery,
        mask: u64,
        pair_list: &[(u8, u8)],
        table: Option<&[u8]>,
    ) -> Result<bool, EnumError> {
        let s = shape(q.n, mask, pair_list);
        let structural = match q.class {
            ClassTag::General => true,
            ClassTag::NonComplex => return Ok(s.none_complex),
            ClassTag::Complex => s.all_complex,
            ClassTag::Core => s.all_complex && s.min_degree >= 2,
            ClassTag::Kernel => unreachable!(),
        };
        if !structural {
            return Ok(false);
        }
        if let Some(table) = table {
            return Ok(u32::from(table[mask as usize]) <= q.g);
        }
        let g = mask_graph(q.n, mask, pair_list);
        Ok(self.oracle.embeddable_graph(&g, q.g)?)
    }

    /// Embeddable multigraphs on `n` vertices with `m` edges and minimum degree ≥ 3,
    /// each with its compensation factor.
    pub fn kernel_class(&self, n: u32, m: u32, g: u32) -> Result<Arc<Vec<WeightedKernel>>, EnumError> {
        if n > self.caps.kernel_max_n || m > self.caps.kernel_max_m {
            return Err(EnumError::CapExceeded {
                what: format!("kernel ({n}, {m})"),
                limit: if n > self.caps.kernel_max_n {
                    self.caps.kernel_max_n
                } else {
                    self.caps.kernel_max_m
                },
            });
        }
        self.kernels_with_deficit(n, m, g, None)
    }

    /// Kernels whose loops and parallel edges could be removed by at most
    /// `max_deficit` subdivision vertices: each loop needs two, and a class of
    /// `i` parallel edges needs `i - 1`. `None` means no restriction.
    pub fn kernels_with_deficit(
        &self,
        n: u32,
        m: u32,
        g: u32,
        max_deficit: Option<u32>,
    ) -> Result<Arc<Vec<WeightedKernel>>, EnumError> {
        let key = (n, m, g, max_deficit);
        if let Some(c) = self.kernels.lock().expect("lock").get(&key) {
            return Ok(c.clone());
        }
        let mut all = Vec::new();
        if n == 0 {
            if m == 0 {
                all.push(LabeledMultigraph::from_edges(0, []).expect("empty"));
            }
        } else {
            let slots: Vec<(u32, u32)> = (0..n).flat_map(|u| (u..n).map(move |v| (u, v))).collect();
            let mut deg = vec![0u32; n as usize];
            let mut mult = vec![0u32; slots.len()];
            let budget = max_deficit.unwrap_or(u32::MAX);
            enumerate_kernels(&slots, 0, m, budget, &mut deg, &mut mult, &mut |mult| {
                let edges = slots
                    .iter()
                    .zip(mult)
                    .filter(|(_, &k)| k > 0)
                    .map(|(&(u, v), &k)| (u + 1, v + 1, k));
                all.push(LabeledMultigraph::with_multiplicities(n, edges).expect("in range"));
            });
        }
        let filtered: Result<Vec<Option<WeightedKernel>>, EnumError> = all
            .into_par_iter()
            .map(|k| {
                Ok(self
                    .oracle
                    .embeddable(&k, g)?
                    .then(|| WeightedKernel::new(k)))
            })
            .collect();
        let class: Arc<Vec<WeightedKernel>> = Arc::new(filtered?.into_iter().flatten().collect());
        self.kernels.lock().expect("lock").insert(key, class.clone());
        Ok(class)
    }

    /// Number of graphs on `n` labeled vertices with `m` edges and no complex component.
    pub fn count_noncomplex(&self, n: u32, m: u32) -> BigUint {
        count_noncomplex(n, m)
    }

    fn complex_count(&self, n_c: u32, m_c: u32, g: u32) -> Result<BigUint, EnumError> {
        self.simple_count(ClassQuery {
            class: ClassTag::Complex,
            n: n_c,
            m: m_c,
            g,
        })
    }

    fn core_count(&self, n: u32, m: u32, g: u32) -> Result<BigUint, EnumError> {
        self.simple_count(ClassQuery {
            class: ClassTag::Core,
            n,
            m,
            g,
        })
    }

    /// `|S_g(n,m)| = Σ C(n, n_C) |C_g(n_C, n_C + l)| |U(n - n_C, m - n_C - l)|`.
    pub fn verify_identity_general(&self, n: u32, m: u32, g: u32) -> Result<IdentityReport, EnumError> {
        let lhs = self.simple_count(ClassQuery {
            class: ClassTag::General,
            n,
            m,
            g,
        })?;
        let mut terms = Vec::new();
        let mut rhs = BigUint::zero();
        for n_c in 0..=n {
            for l in 0..=m.saturating_sub(n_c) {
                if (l == 0) != (n_c == 0) || n_c + l > pair_count(n_c) {
                    continue;
                }
                let m_u = m - n_c - l;
                let n_u = n - n_c;
                let u = count_noncomplex(n_u, m_u);
                if u.is_zero() {
                    continue;
                }
                let c = self.complex_count(n_c, n_c + l, g)?;
                let value = binomial(n as u64, n_c as u64) * c * u;
                if value.is_zero() {
                    continue;
                }
                rhs += &value;
                terms.push(IdentityTerm {
                    index: vec![("n_C".into(), n_c as u64), ("l".into(), l as u64)],
                    value: to_rational(&value),
                });
            }
        }
        finish(
            "general",
            vec![("n".into(), n as u64), ("m".into(), m as u64), ("g".into(), g as u64)],
            to_rational(&lhs),
            to_rational(&rhs),
            terms,
        )
    }

    /// `|C_g(n_C, n_C + l)| = Σ C(n_C, n_core) |Core_g(n_core, n_core + l)| n_core n_C^{n_C - n_core - 1}`.
    pub fn verify_identity_complexcore(&self, n_c: u32, l: u32, g: u32) -> Result<IdentityReport, EnumError> {
        let lhs = self.complex_count(n_c, n_c + l, g)?;
        let mut terms = Vec::new();
        let mut rhs = BigUint::zero();
        for n_core in 1..=n_c {
            let core = self.core_count(n_core, n_core + l, g)?;
            if core.is_zero() {
                continue;
            }
            let trees = if n_core == n_c {
                BigUint::one()
            } else {
                BigUint::from(n_core) * BigUint::from(n_c).pow(n_c - n_core - 1)
            };
            let value = binomial(n_c as u64, n_core as u64) * core * trees;
            rhs += &value;
            terms.push(IdentityTerm {
                index: vec![("n_core".into(), n_core as u64)],
                value: to_rational(&value),
            });
        }
        finish(
            "complexcore",
            vec![("n_C".into(), n_c as u64), ("l".into(), l as u64), ("g".into(), g as u64)],
            to_rational(&lhs),
            to_rational(&rhs),
            terms,
        )
    }

    /// `|Core_g(n_core, n_core + l)| = Σ_d C(n_core, 2l - d) |K_g(2l - d, 3l - d)|_w φ`,
    /// with `|K|_w φ` evaluated as `Σ_K w(K) φ_K`. Kernels that cannot become simple
    /// with `n_core - n_K` subdivision vertices contribute nothing and are skipped.
    pub fn verify_identity_core(&self, n_core: u32, l: u32, g: u32) -> Result<IdentityReport, EnumError> {
        let lhs = self.core_count(n_core, n_core + l, g)?;
        let mut terms = Vec::new();
        let mut rhs = BigRational::zero();
        for d in 0..=2 * l {
            let n_k = 2 * l - d;
            let m_k = 3 * l - d;
            if n_k > n_core || n_k == 0 {
                continue;
            }
            let kernels = self.kernels_with_deficit(n_k, m_k, g, Some(n_core - n_k))?;
            let weighted: BigRational = kernels
                .iter()
                .map(|k| &k.weight * BigRational::from_integer(phi_kernel(&k.kernel, n_core)))
                .fold(BigRational::zero(), |a, b| a + b);
            let value = BigRational::from_integer(BigInt::from(binomial(n_core as u64, n_k as u64)))
                * weighted;
            if value.is_zero() {
                continue;
            }
            rhs += &value;
            terms.push(IdentityTerm {
                index: vec![("d".into(), d as u64)],
                value,
            });
        }
        if !rhs.is_integer() {
            return Err(EnumError::NonIntegralResult(rhs));
        }
        finish(
            "core",
            vec![("n_core".into(), n_core as u64), ("l".into(), l as u64), ("g".into(), g as u64)],
            to_rational(&lhs),
            rhs,
            terms,
        )
    }

    /// Weighted kernel counts for every deficiency, relative to the cubic class,
    /// against `6^d / d!` above and `1 / (216^d d!)` below when `d ≤ 2l/7`.
    pub fn verify_kernel_pumping(&self, l: u32, g: u32) -> Result<Vec<PumpingRow>, EnumError> {
        let weight = |n: u32, m: u32| -> Result<BigRational, EnumError> {
            Ok(self
                .kernel_class(n, m, g)?
                .iter()
                .map(|k| k.weight.clone())
                .fold(BigRational::zero(), |a, b| a + b))
        };
        let cubic = weight(2 * l, 3 * l)?;
        let mut rows = Vec::new();
        for d in 0..=2 * l {
            let class = weight(2 * l - d, 3 * l - d)?;
            let ratio = &class / &cubic;
            let d_fact = BigRational::from_integer(crate::graph::factorial(d as u64));
            let upper = BigRational::from_integer(BigInt::from(6u32).pow(d)) / &d_fact;
            let lower_applies = 7 * d <= 2 * l;
            let lower = BigRational::one()
                / (BigRational::from_integer(BigInt::from(216u32).pow(d)) * &d_fact);
            let ok = ratio <= upper && (!lower_applies || ratio >= lower);
            let row = PumpingRow {
                d,
                ratio,
                upper,
                lower: lower_applies.then_some(lower),
            };
            if !ok {
                return Err(EnumError::BoundViolation(format!(
                    "kernel ratio at l = {l}, d = {d}: {} outside bounds",
                    row.ratio
                )));
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Places the class-average subdivision count between
    /// `(n_core-2l+d)!·C(n_core-5l-1, 3l-d-1)` and `(n_core-2l+d)!·C(n_core+l-1, 3l-d-1)`.
    pub fn verify_binsandballs(&self, l: u32, d: u32, g: u32, n_core: u32) -> Result<BracketReport, EnumError> {
        let kernels = self.kernel_class(2 * l - d, 3 * l - d, g)?;
        let phi = crate::decompose::phi_average(&kernels, n_core)
            .map_err(|e| EnumError::BoundViolation(e.to_string()))?;
        let report = bins_and_balls_bracket(l, d, n_core, phi);
        if report.lower > report.phi || report.phi > report.upper {
            return Err(EnumError::BoundViolation(format!(
                "phi {} outside [{}, {}] at l = {l}, d = {d}, n_core = {n_core}",
                report.phi, report.lower, report.upper
            )));
        }
        Ok(report)
    }
}

fn enumerate_kernels(
    slots: &[(u32, u32)],
    s: usize,
    remaining: u32,
    deficit_left: u32,
    deg: &mut [u32],
    mult: &mut [u32],
    visit: &mut dyn FnMut(&[u32]),
) {
    let shortfall: u32 = deg.iter().map(|&d| 3u32.saturating_sub(d)).sum();
    if shortfall > 2 * remaining {
        return;
    }
    if s == slots.len() {
        if remaining == 0 {
            visit(mult);
        }
        return;
    }
    let (u, v) = slots[s];
    // the row of u ends here: u has no further slots after (u, n-1)
    let closes_row = v as usize == deg.len() - 1;
    for k in 0..=remaining {
        let cost = if k == 0 {
            0
        } else if u == v {
            2 * k
        } else {
            k - 1
        };
        if cost > deficit_left {
            break;
        }
        let add = if u == v { 2 * k } else { k };
        deg[u as usize] += add;
        if u != v {
            deg[v as usize] += k;
        }
        mult[s] = k;
        if !closes_row || deg[u as usize] >= 3 {
            enumerate_kernels(slots, s + 1, remaining - k, deficit_left - cost, deg, mult, visit);
        }
        deg[u as usize] -= add;
        if u != v {
            deg[v as usize] -= k;
        }
    }
    mult[s] = 0;
}

fn to_rational(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

fn finish(
    identity: &str,
    params: Vec<(String, u64)>,
    lhs: BigRational,
    rhs: BigRational,
    terms: Vec<IdentityTerm>,
) -> Result<IdentityReport, EnumError> {
    let report = IdentityReport {
        identity: identity.into(),
        params,
        lhs,
        rhs,
        terms,
    };
    if report.holds() {
        Ok(report)
    } else {
        Err(EnumError::IdentityViolation(Box::new(report)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PumpingRow {
    pub d: u32,
    pub ratio: BigRational,
    pub upper: BigRational,
    pub lower: Option<BigRational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub l: u32,
    pub d: u32,
    pub n_core: u32,
    pub phi: BigRational,
    pub lower: BigRational,
    pub upper: BigRational,
    /// Largest offset ν ∈ [-5, 1] with `(k)!·C(n_core + ν l - 1, 3l - d - 1) = φ`,
    /// where the binomial is extended to real upper argument.
    pub nu: Option<f64>,
}

/// `C(x, k)` for integer `x`, zero whenever `x < k` (including negative `x`).
pub fn binomial_truncated(x: i64, k: u64) -> BigUint {
    if x < k as i64 {
        BigUint::zero()
    } else {
        binomial(x as u64, k)
    }
}

/// Bracket for the average subdivision count, with the offset ν solved numerically.
pub fn bins_and_balls_bracket(l: u32, d: u32, n_core: u32, phi: BigRational) -> BracketReport {
    let k = n_core as i64 - 2 * l as i64 + d as i64;
    let top = (3 * l - d) as u64 - 1;
    let fact = BigRational::from_integer(BigInt::from(crate::graph::factorial(k.max(0) as u64)));
    let bound = |nu: i64| -> BigRational {
        let x = n_core as i64 + nu * l as i64 - 1;
        &fact * to_rational(&binomial_truncated(x, top))
    };
    let lower = bound(-5);
    let upper = bound(1);
    let nu = solve_nu(l, n_core, top, &fact, &phi);
    BracketReport {
        l,
        d,
        n_core,
        phi,
        lower,
        upper,
        nu,
    }
}

/// Bisection for ν on `ν ↦ fact · F(n_core + ν l - 1)`, where
/// `F(x) = x(x-1)…(x-top+1)/top!` for `x ≥ top - 1` and 0 below; F is
/// continuous and non-decreasing, so the largest solution is well defined.
fn solve_nu(l: u32, n_core: u32, top: u64, fact: &BigRational, phi: &BigRational) -> Option<f64> {
    let fact = fact.to_f64()?;
    let target = phi.to_f64()?;
    let value = |nu: f64| -> f64 {
        let x = n_core as f64 + nu * l as f64 - 1.0;
        if x < top as f64 - 1.0 {
            return 0.0;
        }
        let mut acc = 1.0;
        for i in 0..top {
            acc *= (x - i as f64) / (i as f64 + 1.0);
        }
        fact * acc
    };
    let tol = 1e-9 * target.abs().max(1.0);
    if value(-5.0) > target + tol || value(1.0) < target - tol {
        return None;
    }
    // largest ν with value(ν) ≤ target
    let (mut lo, mut hi) = (-5.0f64, 1.0f64);
    if value(hi) <= target + tol {
        return Some(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if value(mid) <= target + tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Connected unicyclic graphs on `s` labeled vertices: choose the cycle's
/// vertex set of size `k`, one of `(k-1)!/2` cycles on it, and a forest on all
/// `s` vertices rooted at the `k` cycle vertices (`k·s^{s-k-1}` of them).
pub fn unicyclic_connected(s: u32) -> BigUint {
    let mut total = BigUint::zero();
    for k in 3..=s {
        let cycles = crate::graph::factorial(k as u64 - 1).to_biguint().expect("positive") / 2u32;
        let forests = if k == s {
            BigUint::one()
        } else {
            BigUint::from(k) * BigUint::from(s).pow(s - k - 1)
        };
        total += binomial(s as u64, k as u64) * cycles * forests;
    }
    total
}

/// Labeled trees on `s` vertices.
pub fn trees(s: u32) -> BigUint {
    if s <= 2 {
        BigUint::one()
    } else {
        BigUint::from(s).pow(s - 2)
    }
}

/// Graphs on `n` labeled vertices with `m` edges whose components are trees or
/// unicyclic. With `t = n - m` tree components the component holding the smallest
/// label gives
/// `U(n, t) = Σ_s C(n-1, s-1) [s^{s-2} U(n-s, t-1) + u(s) U(n-s, t)]`.
pub fn count_noncomplex(n: u32, m: u32) -> BigUint {
    if m > n {
        return BigUint::zero();
    }
    let t = (n - m) as usize;
    let n = n as usize;
    let tree: Vec<BigUint> = (0..=n as u32).map(trees).collect();
    let uni: Vec<BigUint> = (0..=n as u32).map(unicyclic_connected).collect();
    // binomials C(a, b) for a < n, row by row
    let mut binom_rows: Vec<Vec<BigUint>> = Vec::with_capacity(n);
    for a in 0..n {
        let mut row = vec![BigUint::one(); a + 1];
        for b in 1..a {
            row[b] = &binom_rows[a - 1][b - 1] + &binom_rows[a - 1][b];
        }
        binom_rows.push(row);
    }
    let mut previous: Vec<BigUint> = Vec::new();
    for layer in 0..=t {
        let mut current = vec![BigUint::zero(); n + 1];
        current[0] = if layer == 0 { BigUint::one() } else { BigUint::zero() };
        for size in 1..=n {
            let mut acc = BigUint::zero();
            for s in 1..=size {
                let rest = size - s;
                let mut inner = BigUint::zero();
                if layer > 0 && !previous[rest].is_zero() {
                    inner += &tree[s] * &previous[rest];
                }
                if s >= 3 && !current[rest].is_zero() {
                    inner += &uni[s] * &current[rest];
                }
                if !inner.is_zero() {
                    acc += &binom_rows[size - 1][s - 1] * inner;
                }
            }
            current[size] = acc;
        }
        previous = current;
    }
    previous[n].clone()
}

/// `ρ(n, m) = |U(n, m)| / C(C(n, 2), m)`; zero when `m > C(n, 2)`.
pub fn rho_exact(n: u32, m: u32) -> BigRational {
    let total = binomial(pair_count(n) as u64, m as u64);
    if total.is_zero() {
        return BigRational::zero();
    }
    let u = count_noncomplex(n, m);
    BigRational::new(BigInt::from(u), BigInt::from(total))
}

/// `C(n, k)` as an exact integer.
pub fn binomial_exact(n: u64, k: u64) -> BigUint {
    binomial(n, k)
}

/// Integer power helper for rational bounds.
pub fn rational_pow(base: u64, exp: u32) -> BigRational {
    BigRational::from_integer(BigInt::from(base).pow(exp))
}
