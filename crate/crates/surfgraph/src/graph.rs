//! Labeled simple graphs and multigraphs on `{1, …, n}`, component views and
//! the compensation factor of a multigraph.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex label. Labels are 1-based: a graph on `n` vertices uses `1..=n`.
pub type Label = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge {{{0}, {1}}} appears more than once")]
    DuplicateEdge(Label, Label),
    #[error("loop at vertex {0} is not allowed in a simple graph")]
    LoopInSimpleGraph(Label),
    #[error("label {label} is outside 1..={n}")]
    LabelOutOfRange { label: Label, n: u32 },
    #[error("multiplicity of {{{0}, {1}}} must be positive")]
    ZeroMultiplicity(Label, Label),
    #[error("label list of length {labels} does not match {n} vertices")]
    LabelCount { labels: usize, n: u32 },
    #[error("label list must be strictly increasing")]
    UnsortedLabels,
}

fn check_label(label: Label, n: u32) -> Result<(), GraphError> {
    if label == 0 || label > n {
        Err(GraphError::LabelOutOfRange { label, n })
    } else {
        Ok(())
    }
}

fn ordered(u: Label, v: Label) -> (Label, Label) {
    if u <= v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Simple undirected graph on `{1, …, n}`. Edges are stored as sorted pairs `u < v`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct LabeledGraph {
    n: u32,
    edges: Vec<(Label, Label)>,
}

#[derive(Serialize, Deserialize)]
struct GraphJson {
    n: u32,
    edges: Vec<[Label; 2]>,
}

impl TryFrom<GraphJson> for LabeledGraph {
    type Error = GraphError;
    fn try_from(value: GraphJson) -> Result<Self, Self::Error> {
        LabeledGraph::new(value.n, value.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

impl From<LabeledGraph> for GraphJson {
    fn from(g: LabeledGraph) -> Self {
        GraphJson {
            n: g.n,
            edges: g.edges.into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl LabeledGraph {
    pub fn new(
        n: u32,
        edges: impl IntoIterator<Item = (Label, Label)>,
    ) -> Result<Self, GraphError> {
        let mut list = Vec::new();
        for (u, v) in edges {
            check_label(u, n)?;
            check_label(v, n)?;
            if u == v {
                return Err(GraphError::LoopInSimpleGraph(u));
            }
            list.push(ordered(u, v));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(GraphError::DuplicateEdge(w[0].0, w[0].1));
        }
        Ok(LabeledGraph { n, edges: list })
    }

    /// Caller guarantees `edges` is sorted, duplicate free, loop free and in range.
    pub(crate) fn from_sorted_unchecked(n: u32, edges: Vec<(Label, Label)>) -> Self {
        debug_assert!(edges.windows(2).all(|w| w[0] < w[1]));
        debug_assert!(edges.iter().all(|&(u, v)| 0 < u && u < v && v <= n));
        LabeledGraph { n, edges }
    }

    pub fn empty(n: u32) -> Self {
        LabeledGraph { n, edges: Vec::new() }
    }

    pub fn vertex_count(&self) -> u32 {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(Label, Label)] {
        &self.edges
    }

    pub fn has_edge(&self, u: Label, v: Label) -> bool {
        self.edges.binary_search(&ordered(u, v)).is_ok()
    }

    /// Degrees indexed by `label - 1`.
    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n as usize];
        for &(u, v) in &self.edges {
            deg[u as usize - 1] += 1;
            deg[v as usize - 1] += 1;
        }
        deg
    }

    pub fn to_multigraph(&self) -> LabeledMultigraph {
        LabeledMultigraph {
            n: self.n,
            edges: self.edges.iter().map(|&(u, v)| (u, v, 1)).collect(),
        }
    }

    /// Subgraph induced by `labels` (strictly increasing), relabeled order-preservingly.
    pub fn induced(&self, labels: &[Label]) -> Part<LabeledGraph> {
        let index = label_index(self.n, labels);
        let mut edges: Vec<(Label, Label)> = self
            .edges
            .iter()
            .filter_map(|&(u, v)| {
                let a = index[u as usize];
                let b = index[v as usize];
                (a != 0 && b != 0).then_some((a, b))
            })
            .collect();
        edges.sort_unstable();
        Part {
            graph: LabeledGraph::from_sorted_unchecked(labels.len() as u32, edges),
            labels: labels.to_vec(),
        }
    }
}

/// Maps a label to its 1-based position in `labels`, 0 when absent.
pub(crate) fn label_index(n: u32, labels: &[Label]) -> Vec<u32> {
    let top = labels.iter().copied().max().unwrap_or(0).max(n) as usize;
    let mut index = vec![0u32; top + 1];
    for (i, &l) in labels.iter().enumerate() {
        index[l as usize] = i as u32 + 1;
    }
    index
}

/// Multigraph on `{1, …, n}` with loops and parallel edges.
/// Stored as `(u, v, multiplicity)` with `u <= v`, sorted by endpoints.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "GraphJson", into = "GraphJson")]
pub struct LabeledMultigraph {
    n: u32,
    edges: Vec<(Label, Label, u32)>,
}

impl TryFrom<GraphJson> for LabeledMultigraph {
    type Error = GraphError;
    fn try_from(value: GraphJson) -> Result<Self, Self::Error> {
        LabeledMultigraph::from_edges(value.n, value.edges.into_iter().map(|[u, v]| (u, v)))
    }
}

impl From<LabeledMultigraph> for GraphJson {
    fn from(g: LabeledMultigraph) -> Self {
        GraphJson {
            n: g.n,
            edges: g.expanded_edges().into_iter().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl LabeledMultigraph {
    /// Builds a multigraph from an edge list in which pairs may repeat.
    pub fn from_edges(
        n: u32,
        edges: impl IntoIterator<Item = (Label, Label)>,
    ) -> Result<Self, GraphError> {
        let mut counts: BTreeMap<(Label, Label), u32> = BTreeMap::new();
        for (u, v) in edges {
            check_label(u, n)?;
            check_label(v, n)?;
            *counts.entry(ordered(u, v)).or_insert(0) += 1;
        }
        Ok(LabeledMultigraph {
            n,
            edges: counts.into_iter().map(|((u, v), k)| (u, v, k)).collect(),
        })
    }

    /// Builds a multigraph from `(u, v, multiplicity)` triples; repeated pairs add up.
    pub fn with_multiplicities(
        n: u32,
        edges: impl IntoIterator<Item = (Label, Label, u32)>,
    ) -> Result<Self, GraphError> {
        let mut counts: BTreeMap<(Label, Label), u32> = BTreeMap::new();
        for (u, v, k) in edges {
            check_label(u, n)?;
            check_label(v, n)?;
            if k == 0 {
                return Err(GraphError::ZeroMultiplicity(u, v));
            }
            *counts.entry(ordered(u, v)).or_insert(0) += k;
        }
        Ok(LabeledMultigraph {
            n,
            edges: counts.into_iter().map(|((u, v), k)| (u, v, k)).collect(),
        })
    }

    pub fn vertex_count(&self) -> u32 {
        self.n
    }

    /// Number of edges counted with multiplicity; a loop counts once.
    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(|e| e.2 as usize).sum()
    }

    /// Distinct vertex pairs with their multiplicities.
    pub fn edge_multiplicities(&self) -> &[(Label, Label, u32)] {
        &self.edges
    }

    /// Every edge listed once per multiplicity, sorted.
    pub fn expanded_edges(&self) -> Vec<(Label, Label)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for &(u, v, k) in &self.edges {
            for _ in 0..k {
                out.push((u, v));
            }
        }
        out
    }

    pub fn multiplicity(&self, u: Label, v: Label) -> u32 {
        let key = ordered(u, v);
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|i| self.edges[i].2)
            .unwrap_or(0)
    }

    /// Degrees indexed by `label - 1`; a loop adds 2.
    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n as usize];
        for &(u, v, k) in &self.edges {
            deg[u as usize - 1] += k;
            deg[v as usize - 1] += k;
        }
        deg
    }

    pub fn loop_count(&self) -> usize {
        self.edges.iter().filter(|e| e.0 == e.1).map(|e| e.2 as usize).sum()
    }

    pub fn is_simple(&self) -> bool {
        self.edges.iter().all(|&(u, v, k)| u != v && k == 1)
    }

    pub fn try_into_simple(&self) -> Option<LabeledGraph> {
        self.is_simple().then(|| {
            LabeledGraph::from_sorted_unchecked(
                self.n,
                self.edges.iter().map(|&(u, v, _)| (u, v)).collect(),
            )
        })
    }

    /// Drops loops and collapses parallel edges.
    pub fn simplification(&self) -> LabeledGraph {
        LabeledGraph::from_sorted_unchecked(
            self.n,
            self.edges
                .iter()
                .filter(|e| e.0 != e.1)
                .map(|&(u, v, _)| (u, v))
                .collect(),
        )
    }

    pub fn compensation_stats(&self) -> CompensationStats {
        let mut stats = CompensationStats::default();
        let mut loops_at = vec![0u32; self.n as usize];
        for &(u, v, k) in &self.edges {
            if u == v {
                stats.loops += k as u64;
                loops_at[u as usize - 1] += k;
            } else {
                *stats.parallel_classes.entry(k).or_insert(0) += 1;
            }
        }
        for k in loops_at.into_iter().filter(|&k| k > 0) {
            *stats.loop_classes.entry(k).or_insert(0) += 1;
        }
        stats
    }

    /// `2^{-loops} · Π (i!)^{-(pairs of multiplicity i) - (vertices with i loops)}`.
    pub fn compensation_factor(&self) -> BigRational {
        self.compensation_stats().factor()
    }
}

/// Multiplicity statistics that determine the compensation factor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompensationStats {
    /// Number of non-loop vertex pairs joined by exactly `i` edges, keyed by `i`.
    pub parallel_classes: BTreeMap<u32, u64>,
    /// Number of vertices carrying exactly `i` loops, keyed by `i`.
    pub loop_classes: BTreeMap<u32, u64>,
    /// Total number of loops.
    pub loops: u64,
}

impl CompensationStats {
    pub fn factor(&self) -> BigRational {
        let mut denom = BigInt::one() << self.loops as usize;
        for (&i, &count) in self.parallel_classes.iter().chain(self.loop_classes.iter()) {
            let f = factorial(i as u64);
            for _ in 0..count {
                denom *= &f;
            }
        }
        BigRational::new(BigInt::one(), denom)
    }
}

pub(crate) fn factorial(k: u64) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * i)
}

/// A graph placed on an arbitrary set of original labels.
///
/// `graph` lives on `1..=labels.len()`; local vertex `i` stands for `labels[i - 1]`.
/// `labels` is strictly increasing, so the relabeling preserves order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part<G> {
    #[serde(flatten)]
    pub graph: G,
    pub labels: Vec<Label>,
}

impl<G> Part<G> {
    pub fn original(&self, local: Label) -> Label {
        self.labels[local as usize - 1]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// True when the labels are exactly `1..=len`.
    pub fn is_identity(&self) -> bool {
        self.labels.iter().enumerate().all(|(i, &l)| l == i as u32 + 1)
    }
}

impl<G: Order> Part<G> {
    pub fn identity(graph: G) -> Self {
        let labels = (1..=graph.order()).collect();
        Part { graph, labels }
    }

    pub fn placed(graph: G, labels: Vec<Label>) -> Result<Self, GraphError> {
        check_placement(graph.order(), &labels)?;
        Ok(Part { graph, labels })
    }
}

impl Part<LabeledGraph> {
    /// Edges in original labels.
    pub fn original_edges(&self) -> impl Iterator<Item = (Label, Label)> + '_ {
        self.graph
            .edges()
            .iter()
            .map(|&(u, v)| (self.original(u), self.original(v)))
    }
}

/// Number of vertices of a graph-like value.
pub trait Order {
    fn order(&self) -> u32;
}

impl Order for LabeledGraph {
    fn order(&self) -> u32 {
        self.n
    }
}

impl Order for LabeledMultigraph {
    fn order(&self) -> u32 {
        self.n
    }
}

fn check_placement(n: u32, labels: &[Label]) -> Result<(), GraphError> {
    if labels.len() != n as usize {
        return Err(GraphError::LabelCount { labels: labels.len(), n });
    }
    if labels.first() == Some(&0) || labels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(GraphError::UnsortedLabels);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComponentClass {
    /// `|E| = |V| - 1`
    Tree,
    /// `|E| = |V|`
    Unicyclic,
    /// `|E| > |V|`
    Complex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    /// Sorted labels of the component.
    pub vertices: Vec<Label>,
    /// Edge count with multiplicity.
    pub edges: u64,
    pub class: ComponentClass,
}

impl Component {
    pub fn order(&self) -> usize {
        self.vertices.len()
    }

    /// `|E| - |V|` for complex components, 0 otherwise.
    pub fn excess(&self) -> u64 {
        self.edges.saturating_sub(self.vertices.len() as u64)
    }
}

/// Connected components, largest first; ties broken by smallest label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentView {
    pub components: Vec<Component>,
}

impl ComponentView {
    pub fn of_graph(g: &LabeledGraph) -> Self {
        Self::build(g.vertex_count(), g.edges().iter().map(|&(u, v)| (u, v, 1)))
    }

    pub fn of_multigraph(g: &LabeledMultigraph) -> Self {
        Self::build(g.vertex_count(), g.edge_multiplicities().iter().copied())
    }

    fn build(n: u32, edges: impl Iterator<Item = (Label, Label, u32)> + Clone) -> Self {
        let n = n as usize;
        let mut uf = UnionFind::new(n);
        for (u, v, _) in edges.clone() {
            uf.union(u as usize - 1, v as usize - 1);
        }
        let mut slot = vec![usize::MAX; n];
        let mut comps: Vec<Component> = Vec::new();
        for x in 0..n {
            let r = uf.find(x);
            if slot[r] == usize::MAX {
                slot[r] = comps.len();
                comps.push(Component {
                    vertices: Vec::new(),
                    edges: 0,
                    class: ComponentClass::Tree,
                });
            }
            comps[slot[r]].vertices.push(x as Label + 1);
        }
        for (u, _, k) in edges {
            let r = uf.find(u as usize - 1);
            comps[slot[r]].edges += k as u64;
        }
        for c in &mut comps {
            let order = c.vertices.len() as u64;
            c.class = if c.edges < order {
                ComponentClass::Tree
            } else if c.edges == order {
                ComponentClass::Unicyclic
            } else {
                ComponentClass::Complex
            };
        }
        comps.sort_by(|a, b| {
            b.vertices
                .len()
                .cmp(&a.vertices.len())
                .then(a.vertices[0].cmp(&b.vertices[0]))
        });
        ComponentView { components: comps }
    }

    pub fn largest(&self) -> Option<&Component> {
        self.components.first()
    }

    /// Total excess over complex components.
    pub fn excess(&self) -> u64 {
        self.components.iter().map(Component::excess).sum()
    }

    pub fn has_complex(&self) -> bool {
        self.components.iter().any(|c| c.class == ComponentClass::Complex)
    }

    /// Sorted labels lying in complex components.
    pub fn complex_vertices(&self) -> Vec<Label> {
        self.vertices_where(|c| c.class == ComponentClass::Complex)
    }

    /// Sorted labels lying in tree or unicyclic components.
    pub fn noncomplex_vertices(&self) -> Vec<Label> {
        self.vertices_where(|c| c.class != ComponentClass::Complex)
    }

    fn vertices_where(&self, keep: impl Fn(&Component) -> bool) -> Vec<Label> {
        let mut out: Vec<Label> = self
            .components
            .iter()
            .filter(|c| keep(c))
            .flat_map(|c| c.vertices.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }
}

pub(crate) struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = p;
        }
        x
    }

    /// Returns false when `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb as u32,
            std::cmp::Ordering::Greater => self.parent[rb] = ra as u32,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra as u32;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Compressed adjacency over 0-based vertices; each edge id appears at both ends
/// (twice at the same vertex for a loop).
pub(crate) struct Csr {
    pub offsets: Vec<usize>,
    pub targets: Vec<u32>,
    pub edge_ids: Vec<u32>,
}

impl Csr {
    /// `edges` are 0-based endpoint pairs; the edge id is the position in the slice.
    pub(crate) fn new(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, v) in edges {
            offsets[u as usize + 1] += 1;
            offsets[v as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut targets = vec![0u32; offsets[n]];
        let mut edge_ids = vec![0u32; offsets[n]];
        for (id, &(u, v)) in edges.iter().enumerate() {
            targets[fill[u as usize]] = v;
            edge_ids[fill[u as usize]] = id as u32;
            fill[u as usize] += 1;
            targets[fill[v as usize]] = u;
            edge_ids[fill[v as usize]] = id as u32;
            fill[v as usize] += 1;
        }
        Csr {
            offsets,
            targets,
            edge_ids,
        }
    }

    pub(crate) fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub(crate) fn range(&self, v: usize) -> std::ops::Range<usize> {
        self.offsets[v]..self.offsets[v + 1]
    }
}
