//! Complex part, 2-core and kernel of a graph, and the inverse constructions:
//! subdividing kernel edges, attaching rooted trees and adding the non-complex part.

use std::collections::{BinaryHeap, HashMap, HashSet};
use std::cmp::Reverse;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    factorial, ComponentView, Csr, GraphError, Label, LabeledGraph, LabeledMultigraph, Part,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("subdivision plan does not match the kernel: {0}")]
    InconsistentPlan(String),
    #[error("label {0} is used twice")]
    LabelClash(Label),
    #[error("forest is malformed: {0}")]
    InvalidForest(String),
    #[error("the non-complex part has a complex component")]
    ComplexComponentInU,
    #[error("label sets do not cover 1..={0}")]
    LabelGap(u32),
    #[error("no kernel in the class")]
    EmptyKernelClass,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// One kernel edge with the labels placed on it, read from `from` to `to`.
/// For a loop `from == to` and the sequence fixes one of its two orientations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlannedEdge {
    pub from: Label,
    pub to: Label,
    pub interior: Vec<Label>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdivisionPlan {
    pub edges: Vec<PlannedEdge>,
}

impl SubdivisionPlan {
    pub fn new_vertex_count(&self) -> usize {
        self.edges.iter().map(|e| e.interior.len()).sum()
    }

    /// Number of subdivision vertices on each planned edge, in plan order.
    pub fn counts(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.interior.len()).collect()
    }
}

/// Rooted trees hanging off a core: each entry is `(child, parent)` in original labels.
/// Roots are the core vertices and never appear as children.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Forest {
    pub parent_of: Vec<(Label, Label)>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionCounts {
    pub n: u64,
    pub m: u64,
    #[serde(rename = "n_C")]
    pub n_complex: u64,
    #[serde(rename = "n_U")]
    pub n_noncomplex: u64,
    #[serde(rename = "m_U")]
    pub m_noncomplex: u64,
    pub n_core: u64,
    #[serde(rename = "n_K")]
    pub n_kernel: u64,
    #[serde(rename = "m_K")]
    pub m_kernel: u64,
    #[serde(rename = "l")]
    pub excess: u64,
    #[serde(rename = "d")]
    pub deficiency: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    #[serde(flatten)]
    pub counts: DecompositionCounts,
    pub complex_part: Part<LabeledGraph>,
    pub noncomplex_part: Part<LabeledGraph>,
    pub core: Part<LabeledGraph>,
    pub kernel: Part<LabeledMultigraph>,
    /// Kernel edges with their subdivision vertices, in original labels.
    pub plan: SubdivisionPlan,
    /// Trees attached to the core, in original labels.
    pub forest: Forest,
}

pub fn decompose(g: &LabeledGraph) -> Decomposition {
    decompose_with_priority(g, None)
}

/// `priority[v-1]` orders the removal of degree-one vertices (smallest first);
/// `None` means ascending label.
pub(crate) fn decompose_with_priority(g: &LabeledGraph, priority: Option<&[u32]>) -> Decomposition {
    let view = ComponentView::of_graph(g);
    let complex_part = g.induced(&view.complex_vertices());
    let noncomplex_part = g.induced(&view.noncomplex_vertices());

    let local_priority: Option<Vec<u32>> =
        priority.map(|p| complex_part.labels.iter().map(|&l| p[l as usize - 1]).collect());
    let (core_local, parents) = peel(&complex_part.graph, local_priority.as_deref());
    let core_in_complex = complex_part.graph.induced(&core_local);
    let core = Part {
        labels: core_in_complex
            .labels
            .iter()
            .map(|&l| complex_part.original(l))
            .collect(),
        graph: core_in_complex.graph,
    };
    let forest = Forest {
        parent_of: parents
            .into_iter()
            .map(|(c, p)| (complex_part.original(c), complex_part.original(p)))
            .collect(),
    };

    let (kernel_local, plan_local) = contract(&core.graph);
    let kernel = Part {
        labels: kernel_local.labels.iter().map(|&l| core.original(l)).collect(),
        graph: kernel_local.graph,
    };
    let plan = SubdivisionPlan {
        edges: plan_local
            .into_iter()
            .map(|e| PlannedEdge {
                from: core.original(e.from),
                to: core.original(e.to),
                interior: e.interior.iter().map(|&l| core.original(l)).collect(),
            })
            .collect(),
    };

    let n_c = complex_part.len() as u64;
    let m_c = complex_part.graph.edge_count() as u64;
    let excess = m_c - n_c;
    let n_k = kernel.len() as u64;
    let counts = DecompositionCounts {
        n: g.vertex_count() as u64,
        m: g.edge_count() as u64,
        n_complex: n_c,
        n_noncomplex: noncomplex_part.len() as u64,
        m_noncomplex: noncomplex_part.graph.edge_count() as u64,
        n_core: core.len() as u64,
        n_kernel: n_k,
        m_kernel: kernel.graph.edge_count() as u64,
        excess,
        deficiency: 2 * excess - n_k,
    };
    Decomposition {
        counts,
        complex_part,
        noncomplex_part,
        core,
        kernel,
        plan,
        forest,
    }
}

/// Repeatedly deletes degree-one vertices. Returns the surviving labels (sorted)
/// and `(removed, neighbour at removal)` pairs in removal order.
fn peel(g: &LabeledGraph, priority: Option<&[u32]>) -> (Vec<Label>, Vec<(Label, Label)>) {
    let n = g.vertex_count() as usize;
    let edges: Vec<(u32, u32)> = g.edges().iter().map(|&(u, v)| (u - 1, v - 1)).collect();
    let csr = Csr::new(n, &edges);
    let mut deg: Vec<usize> = (0..n).map(|v| csr.degree(v)).collect();
    let key = |v: usize| priority.map_or(v as u32, |p| p[v]);
    let mut removed = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(u32, usize)>> = (0..n)
        .filter(|&v| deg[v] == 1)
        .map(|v| Reverse((key(v), v)))
        .collect();
    let mut parents = Vec::new();
    while let Some(Reverse((_, v))) = heap.pop() {
        if removed[v] || deg[v] != 1 {
            continue;
        }
        removed[v] = true;
        let parent = csr
            .range(v)
            .map(|i| csr.targets[i] as usize)
            .find(|&w| !removed[w])
            .expect("degree-one vertex has a live neighbour");
        parents.push((v as Label + 1, parent as Label + 1));
        deg[parent] -= 1;
        if deg[parent] == 1 {
            heap.push(Reverse((key(parent), parent)));
        }
    }
    let core = (0..n)
        .filter(|&v| !removed[v] && deg[v] > 0)
        .map(|v| v as Label + 1)
        .collect();
    (core, parents)
}

/// Replaces each maximal path through degree-two vertices by one edge.
/// Plan labels refer to the vertices of `core`.
fn contract(core: &LabeledGraph) -> (Part<LabeledMultigraph>, Vec<PlannedEdge>) {
    let n = core.vertex_count() as usize;
    let edges: Vec<(u32, u32)> = core.edges().iter().map(|&(u, v)| (u - 1, v - 1)).collect();
    let csr = Csr::new(n, &edges);
    let is_branch: Vec<bool> = (0..n).map(|v| csr.degree(v) >= 3).collect();
    let mut used = vec![false; edges.len()];
    let mut plan = Vec::new();
    for v in (0..n).filter(|&v| is_branch[v]) {
        for slot in csr.range(v) {
            let first = csr.edge_ids[slot] as usize;
            if used[first] {
                continue;
            }
            used[first] = true;
            let mut last = first;
            let mut cur = csr.targets[slot] as usize;
            let mut interior = Vec::new();
            while !is_branch[cur] {
                interior.push(cur as Label + 1);
                let next = csr
                    .range(cur)
                    .find(|&i| csr.edge_ids[i] as usize != last)
                    .expect("path vertex has degree two");
                last = csr.edge_ids[next] as usize;
                used[last] = true;
                cur = csr.targets[next] as usize;
            }
            plan.push(PlannedEdge {
                from: v as Label + 1,
                to: cur as Label + 1,
                interior,
            });
        }
    }
    let branch: Vec<Label> = (0..n).filter(|&v| is_branch[v]).map(|v| v as Label + 1).collect();
    let index = crate::graph::label_index(n as u32, &branch);
    let kernel = LabeledMultigraph::from_edges(
        branch.len() as u32,
        plan.iter().map(|e| (index[e.from as usize], index[e.to as usize])),
    )
    .expect("kernel labels are in range");
    (
        Part {
            graph: kernel,
            labels: branch,
        },
        plan,
    )
}

/// Admissibility conditions for decomposition counts of a graph embeddable on the
/// surface of genus `g`. Returns the names of violated conditions.
pub fn admissibility_violations(c: &DecompositionCounts, g: u32) -> Vec<&'static str> {
    let mut bad = Vec::new();
    if c.n_complex > c.n {
        bad.push("A1: n_C <= n");
    }
    if c.n_core > c.n_complex {
        bad.push("A2: n_core <= n_C");
    }
    if c.excess + c.n_complex > c.m {
        bad.push("A3: l <= m - n_C");
    }
    if (c.excess == 0) != (c.n_complex == 0) {
        bad.push("A4: l = 0 iff n_C = 0");
    }
    if c.n_complex > 0 && (c.excess as i64) > 2 * c.n_core as i64 + 6 * (g as i64 - 1) {
        bad.push("A5: l <= 2 n_core + 6(g - 1)");
    }
    if c.deficiency > 2 * c.excess {
        bad.push("A6: d <= 2l");
    }
    if c.n_kernel + c.deficiency != 2 * c.excess {
        bad.push("n_K = 2l - d");
    }
    if c.m_kernel + c.deficiency != 3 * c.excess {
        bad.push("m_K = 3l - d");
    }
    bad
}

/// Places the plan's interior labels on the kernel edges. Kernel vertex `i` is
/// `kernel.labels[i-1]`; the result lives on the union of kernel and interior labels.
pub fn subdivide(
    kernel: &Part<LabeledMultigraph>,
    plan: &SubdivisionPlan,
) -> Result<Part<LabeledMultigraph>, DecomposeError> {
    let mut wanted: HashMap<(Label, Label), u32> = HashMap::new();
    for &(u, v, k) in kernel.graph.edge_multiplicities() {
        *wanted.entry((kernel.original(u), kernel.original(v))).or_insert(0) += k;
    }
    for e in &plan.edges {
        let key = (e.from.min(e.to), e.from.max(e.to));
        match wanted.get_mut(&key) {
            Some(k) if *k > 0 => *k -= 1,
            _ => {
                return Err(DecomposeError::InconsistentPlan(format!(
                    "edge {{{}, {}}} is not available in the kernel",
                    e.from, e.to
                )))
            }
        }
    }
    if let Some((&(u, v), _)) = wanted.iter().find(|(_, &k)| k > 0) {
        return Err(DecomposeError::InconsistentPlan(format!(
            "kernel edge {{{u}, {v}}} is missing from the plan"
        )));
    }

    let mut all: Vec<Label> = kernel.labels.clone();
    all.extend(plan.edges.iter().flat_map(|e| e.interior.iter().copied()));
    all.sort_unstable();
    if let Some(w) = all.windows(2).find(|w| w[0] == w[1]) {
        return Err(DecomposeError::LabelClash(w[0]));
    }
    if all.first() == Some(&0) {
        return Err(DecomposeError::InconsistentPlan("label 0".into()));
    }
    let index = crate::graph::label_index(0, &all);
    let mut edges = Vec::new();
    for e in &plan.edges {
        let mut prev = e.from;
        for &x in &e.interior {
            edges.push((index[prev as usize], index[x as usize]));
            prev = x;
        }
        edges.push((index[prev as usize], index[e.to as usize]));
    }
    let graph = LabeledMultigraph::from_edges(all.len() as u32, edges)?;
    Ok(Part { graph, labels: all })
}

/// Hangs rooted trees off a core. Every child must reach a core vertex through
/// its parents; the result lives on the union of core and child labels.
pub fn attach_forest(
    core: &Part<LabeledGraph>,
    forest: &Forest,
) -> Result<Part<LabeledGraph>, DecomposeError> {
    let core_set: HashSet<Label> = core.labels.iter().copied().collect();
    let mut parent: HashMap<Label, Label> = HashMap::new();
    for &(c, p) in &forest.parent_of {
        if core_set.contains(&c) || parent.insert(c, p).is_some() {
            return Err(DecomposeError::LabelClash(c));
        }
        if c == 0 {
            return Err(DecomposeError::InvalidForest("label 0".into()));
        }
    }
    // every child must reach the core without revisiting a vertex
    let mut settled: HashSet<Label> = HashSet::new();
    for &start in parent.keys() {
        let mut path = Vec::new();
        let mut cur = start;
        while !core_set.contains(&cur) && !settled.contains(&cur) {
            if path.len() > parent.len() {
                return Err(DecomposeError::InvalidForest(format!(
                    "cycle through {start}"
                )));
            }
            path.push(cur);
            cur = *parent.get(&cur).ok_or_else(|| {
                DecomposeError::InvalidForest(format!("parent {cur} is neither core nor tree"))
            })?;
        }
        settled.extend(path);
    }

    let mut all: Vec<Label> = core.labels.clone();
    all.extend(parent.keys().copied());
    all.sort_unstable();
    let index = crate::graph::label_index(0, &all);
    let edges = core
        .original_edges()
        .chain(forest.parent_of.iter().copied())
        .map(|(u, v)| (index[u as usize], index[v as usize]));
    let graph = LabeledGraph::new(all.len() as u32, edges)?;
    Ok(Part { graph, labels: all })
}

/// Joins a complex part and a non-complex part whose label sets partition `1..=n`.
pub fn add_noncomplex(
    complex: &Part<LabeledGraph>,
    noncomplex: &Part<LabeledGraph>,
) -> Result<LabeledGraph, DecomposeError> {
    if ComponentView::of_graph(&noncomplex.graph).has_complex() {
        return Err(DecomposeError::ComplexComponentInU);
    }
    let n = (complex.len() + noncomplex.len()) as u32;
    let mut seen = vec![false; n as usize + 1];
    for &l in complex.labels.iter().chain(&noncomplex.labels) {
        if l == 0 || l > n {
            return Err(DecomposeError::LabelGap(n));
        }
        if std::mem::replace(&mut seen[l as usize], true) {
            return Err(DecomposeError::LabelClash(l));
        }
    }
    let edges = complex.original_edges().chain(noncomplex.original_edges());
    Ok(LabeledGraph::new(n, edges)?)
}

/// Every way of placing `n_core - n_K` new labels on the kernel edges, with each
/// edge oriented (loops by a fixed dart). Returns the number of plans and the
/// number of distinct simple cores they produce, together with how many plans
/// produce each such core.
pub fn count_subdivisions(kernel: &LabeledMultigraph, n_core: u32) -> SubdivisionCount {
    let n_k = kernel.vertex_count();
    assert!(n_core >= n_k, "n_core must be at least the kernel order");
    let edges = kernel.expanded_edges();
    let mut paths: Vec<Vec<Label>> = vec![Vec::new(); edges.len()];
    let mut outcomes: HashMap<Vec<(Label, Label)>, u64> = HashMap::new();
    let mut raw: u64 = 0;
    place_labels(&edges, &mut paths, n_k + 1, n_core, &mut |paths| {
        raw += 1;
        if let Some(core) = simple_edge_set(&edges, paths) {
            *outcomes.entry(core).or_insert(0) += 1;
        }
    });
    let mut multiplicities: Vec<u64> = outcomes.values().copied().collect();
    multiplicities.sort_unstable();
    multiplicities.dedup();
    SubdivisionCount {
        raw: BigInt::from(raw),
        simple: BigInt::from(outcomes.len()),
        plans_per_simple_core: multiplicities,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubdivisionCount {
    pub raw: BigInt,
    pub simple: BigInt,
    /// Distinct values of "plans producing this core" over all simple cores.
    pub plans_per_simple_core: Vec<u64>,
}

/// Inserts labels `next..=last` one at a time into any slot of any edge path.
fn place_labels(
    edges: &[(Label, Label)],
    paths: &mut Vec<Vec<Label>>,
    next: Label,
    last: Label,
    visit: &mut dyn FnMut(&[Vec<Label>]),
) {
    if next > last {
        visit(paths);
        return;
    }
    for e in 0..edges.len() {
        for pos in 0..=paths[e].len() {
            paths[e].insert(pos, next);
            place_labels(edges, paths, next + 1, last, visit);
            paths[e].remove(pos);
        }
    }
}

fn simple_edge_set(edges: &[(Label, Label)], paths: &[Vec<Label>]) -> Option<Vec<(Label, Label)>> {
    let mut out = Vec::new();
    for (&(u, v), path) in edges.iter().zip(paths) {
        let mut prev = u;
        for &x in path.iter().chain(std::iter::once(&v)) {
            if prev == x {
                return None;
            }
            out.push((prev.min(x), prev.max(x)));
            prev = x;
        }
    }
    out.sort_unstable();
    let before = out.len();
    out.dedup();
    (out.len() == before).then_some(out)
}

/// `k!` times the number of ways to split `k = n_core - n_K` subdivision vertices
/// among the kernel edges so that the result is simple: every loop receives at
/// least two, and each class of parallel edges leaves at most one edge bare.
pub fn phi_kernel(kernel: &LabeledMultigraph, n_core: u32) -> BigInt {
    let n_k = kernel.vertex_count();
    if n_core < n_k {
        return BigInt::zero();
    }
    let k = (n_core - n_k) as usize;
    // one entry per parallel class: (is_loop, size)
    let classes: Vec<(bool, usize)> = kernel
        .edge_multiplicities()
        .iter()
        .map(|&(u, v, m)| (u == v, m as usize))
        .collect();
    let slots: usize = classes.iter().map(|c| c.1).sum();
    let mut counts = vec![0usize; slots];
    let feasible = count_feasible(&classes, &mut counts, 0, 0, k);
    factorial(k as u64) * feasible
}

fn count_feasible(
    classes: &[(bool, usize)],
    counts: &mut [usize],
    slot: usize,
    used: usize,
    k: usize,
) -> u64 {
    if slot == counts.len() {
        return u64::from(used == k && distribution_is_simple(classes, counts));
    }
    let mut total = 0;
    for c in 0..=(k - used) {
        counts[slot] = c;
        total += count_feasible(classes, counts, slot + 1, used + c, k);
    }
    total
}

fn distribution_is_simple(classes: &[(bool, usize)], counts: &[usize]) -> bool {
    let mut offset = 0;
    for &(is_loop, size) in classes {
        let group = &counts[offset..offset + size];
        offset += size;
        if is_loop {
            if group.iter().any(|&c| c < 2) {
                return false;
            }
        } else if group.iter().filter(|&&c| c == 0).count() > 1 {
            return false;
        }
    }
    true
}

/// Weighted sum `Σ w(K)·phi_kernel(K)` and total weight `Σ w(K)` over a kernel class.
pub fn phi_weighted_sum(kernels: &[WeightedKernel], n_core: u32) -> (BigRational, BigRational) {
    let mut num = BigRational::zero();
    let mut den = BigRational::zero();
    for k in kernels {
        num += &k.weight * BigRational::from_integer(phi_kernel(&k.kernel, n_core));
        den += &k.weight;
    }
    (num, den)
}

/// Weighted average of `phi_kernel` over a kernel class.
pub fn phi_average(kernels: &[WeightedKernel], n_core: u32) -> Result<BigRational, DecomposeError> {
    let (num, den) = phi_weighted_sum(kernels, n_core);
    if den.is_zero() {
        return Err(DecomposeError::EmptyKernelClass);
    }
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightedKernel {
    pub kernel: LabeledMultigraph,
    pub weight: BigRational,
}

impl WeightedKernel {
    pub fn new(kernel: LabeledMultigraph) -> Self {
        let weight = kernel.compensation_factor();
        WeightedKernel { kernel, weight }
    }
}

/// Number of raw plans for a kernel with `m_k` edges and `k` new labels:
/// `k! · C(k + m_k - 1, m_k - 1)`.
pub fn raw_plan_count(m_k: u64, k: u64) -> BigInt {
    if m_k == 0 {
        return if k == 0 { BigInt::one() } else { BigInt::zero() };
    }
    // rising factorial m_k (m_k + 1) … (m_k + k - 1)
    (0..k).fold(BigInt::one(), |acc, i| acc * (m_k + i))
}
