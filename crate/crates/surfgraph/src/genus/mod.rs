//! Orientable genus: exact search over rotation systems for small multigraphs and
//! a linear-time planarity test for large simple graphs.

mod planarity;
mod rotation;

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use planarity::is_planar;
pub use rotation::{embedding_genus, faces, Dart, RotationSystem};

use crate::graph::{ComponentView, Label, LabeledGraph, LabeledMultigraph};
use rotation::GenusSearch;

/// Darts up to which the search runs without a node budget.
pub const DEFAULT_DART_CAP: usize = 24;
/// Nodes the search may visit on graphs above the dart cap.
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;
/// Environment variable overriding the dart cap.
pub const DART_CAP_ENV: &str = "SURFGRAPH_GENUS_CAP";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenusError {
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid rotation system: {0}")]
    InvalidRotation(String),
    #[error("search on a component with {darts} darts did not finish within {budget} nodes")]
    TooLarge { darts: usize, budget: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenusResult {
    pub genus: u32,
    pub witness: Option<RotationSystem>,
}

/// Search limits plus a memo of genus values keyed by canonical form.
pub struct GenusOracle {
    dart_cap: usize,
    node_budget: u64,
    cache: Mutex<HashMap<Vec<u32>, u32>>,
}

impl Default for GenusOracle {
    fn default() -> Self {
        GenusOracle::new(DEFAULT_DART_CAP, DEFAULT_NODE_BUDGET)
    }
}

impl GenusOracle {
    pub fn new(dart_cap: usize, node_budget: u64) -> Self {
        GenusOracle {
            dart_cap,
            node_budget,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Default limits with the dart cap taken from `SURFGRAPH_GENUS_CAP` when set.
    pub fn from_env() -> Self {
        let cap = std::env::var(DART_CAP_ENV)
            .ok()
            .and_then(|s| s.parse().ok())
            .unwrap_or(DEFAULT_DART_CAP);
        GenusOracle::new(cap, DEFAULT_NODE_BUDGET)
    }

    pub fn dart_cap(&self) -> usize {
        self.dart_cap
    }

    fn budget_for(&self, darts: usize) -> Option<u64> {
        (darts > self.dart_cap).then_some(self.node_budget)
    }

    /// Minimum genus with a witness rotation system, by search over rotation
    /// systems of each component of `m` as given (no reductions).
    pub fn min_genus(&self, m: &LabeledMultigraph) -> Result<GenusResult, GenusError> {
        let edges = m.expanded_edges();
        let mut rotations: Vec<Vec<Dart>> = vec![Vec::new(); m.vertex_count() as usize];
        let mut total = 0;
        for comp in ComponentView::of_multigraph(m).components {
            let local = local_index(m.vertex_count(), &comp.vertices);
            let ids: Vec<usize> = (0..edges.len())
                .filter(|&e| local[edges[e].0 as usize] != u32::MAX)
                .collect();
            let local_edges: Vec<(u32, u32)> = ids
                .iter()
                .map(|&e| (local[edges[e].0 as usize], local[edges[e].1 as usize]))
                .collect();
            let darts = 2 * local_edges.len();
            let search = GenusSearch::new(comp.vertices.len(), &local_edges, self.budget_for(darts));
            let outcome = search.minimum(0).ok_or(GenusError::TooLarge {
                darts,
                budget: self.node_budget,
            })?;
            total += outcome.genus;
            let n_local = comp.vertices.len();
            let darts_at = |v: usize| -> Vec<usize> {
                let mut at = Vec::new();
                for (i, &(a, b)) in local_edges.iter().enumerate() {
                    if a as usize == v {
                        at.push(2 * i);
                    }
                    if b as usize == v {
                        at.push(2 * i + 1);
                    }
                }
                at
            };
            let cycles = rotation::rotations_from_successor(darts_at, n_local, &outcome.successor);
            for (v, cycle) in cycles.into_iter().enumerate() {
                rotations[comp.vertices[v] as usize - 1] = cycle
                    .into_iter()
                    .map(|d| {
                        let local_dart = rotation::dart_from_index(d);
                        Dart(ids[local_dart.0 as usize] as u32, local_dart.1)
                    })
                    .collect();
            }
        }
        Ok(GenusResult {
            genus: total,
            witness: Some(RotationSystem { rotations }),
        })
    }

    /// Minimum genus by rotation search on each component of `m` as given,
    /// memoized by canonical form.
    pub fn searched_genus(&self, m: &LabeledMultigraph) -> Result<u32, GenusError> {
        let mut total = 0;
        for comp in ComponentView::of_multigraph(m).components {
            let local = local_index(m.vertex_count(), &comp.vertices);
            let edges: Vec<(u32, u32)> = m
                .expanded_edges()
                .into_iter()
                .filter(|e| local[e.0 as usize] != u32::MAX)
                .map(|(u, v)| (local[u as usize], local[v as usize]))
                .collect();
            total += self.component_genus(comp.vertices.len(), &edges, 0)?;
        }
        Ok(total)
    }

    /// Minimum genus using genus-preserving reductions, planarity testing of the
    /// reduced components and search only where the planarity test fails.
    pub fn genus(&self, m: &LabeledMultigraph) -> Result<u32, GenusError> {
        let reduced = reduce(m);
        let mut total = 0;
        for comp in ComponentView::of_graph(&reduced).components {
            if comp.edges == 0 {
                continue;
            }
            let part = reduced.induced(&comp.vertices);
            if is_planar(&part.graph) {
                continue;
            }
            let edges: Vec<(u32, u32)> =
                part.graph.edges().iter().map(|&(u, v)| (u - 1, v - 1)).collect();
            total += self.component_genus(comp.vertices.len(), &edges, 1)?;
        }
        Ok(total)
    }

    /// Whether `m` embeds on the orientable surface of genus `g`.
    pub fn embeddable(&self, m: &LabeledMultigraph, g: u32) -> Result<bool, GenusError> {
        if is_planar(&m.simplification()) {
            return Ok(true);
        }
        if g == 0 {
            return Ok(false);
        }
        Ok(self.genus(m)? <= g)
    }

    /// Whether a simple graph embeds on the surface of genus `g`.
    pub fn embeddable_graph(&self, g: &LabeledGraph, genus: u32) -> Result<bool, GenusError> {
        if is_planar(g) {
            return Ok(true);
        }
        if genus == 0 {
            return Ok(false);
        }
        Ok(self.genus(&g.to_multigraph())? <= genus)
    }

    fn component_genus(
        &self,
        n: usize,
        edges: &[(u32, u32)],
        known_lower: u32,
    ) -> Result<u32, GenusError> {
        let key = canonical_key(n, edges);
        if let Some(key) = &key {
            if let Some(&g) = self.cache.lock().expect("cache lock").get(key) {
                return Ok(g);
            }
        }
        let darts = 2 * edges.len();
        let outcome = GenusSearch::new(n, edges, self.budget_for(darts))
            .minimum(known_lower)
            .ok_or(GenusError::TooLarge {
                darts,
                budget: self.node_budget,
            })?;
        if let Some(key) = key {
            self.cache.lock().expect("cache lock").insert(key, outcome.genus);
        }
        Ok(outcome.genus)
    }
}

/// Minimum genus with the default oracle limits and no memo.
pub fn min_genus(m: &LabeledMultigraph) -> Result<GenusResult, GenusError> {
    GenusOracle::default().min_genus(m)
}

/// Whether `m` embeds on the surface of genus `g`, with default oracle limits.
pub fn embeddable(m: &LabeledMultigraph, g: u32) -> Result<bool, GenusError> {
    GenusOracle::default().embeddable(m, g)
}

fn local_index(n: u32, vertices: &[Label]) -> Vec<u32> {
    let mut local = vec![u32::MAX; n as usize + 1];
    for (i, &v) in vertices.iter().enumerate() {
        local[v as usize] = i as u32;
    }
    local
}

/// Removes loops, merges parallel edges, deletes vertices of degree at most one
/// and suppresses vertices of degree two until none of these apply. Each step
/// leaves the orientable genus unchanged. Returns a simple graph on the original
/// vertex set in which removed vertices are isolated.
pub fn reduce(m: &LabeledMultigraph) -> LabeledGraph {
    let n = m.vertex_count() as usize;
    let mut adj: Vec<std::collections::BTreeSet<u32>> = vec![Default::default(); n];
    for &(u, v, _) in m.edge_multiplicities() {
        if u != v {
            adj[u as usize - 1].insert(v - 1);
            adj[v as usize - 1].insert(u - 1);
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| adj[v].len() <= 2).collect();
    while let Some(v) = queue.pop() {
        match adj[v].len() {
            0 => {}
            1 => {
                let w = *adj[v].iter().next().expect("one neighbour") as usize;
                adj[v].clear();
                adj[w].remove(&(v as u32));
                if adj[w].len() <= 2 {
                    queue.push(w);
                }
            }
            2 => {
                let mut it = adj[v].iter();
                let a = *it.next().expect("two neighbours") as usize;
                let b = *it.next().expect("two neighbours") as usize;
                adj[v].clear();
                adj[a].remove(&(v as u32));
                adj[b].remove(&(v as u32));
                // a parallel edge merges into the existing one
                adj[a].insert(b as u32);
                adj[b].insert(a as u32);
                for w in [a, b] {
                    if adj[w].len() <= 2 {
                        queue.push(w);
                    }
                }
            }
            _ => {}
        }
    }
    let mut edges = Vec::new();
    for (v, nb) in adj.iter().enumerate() {
        for &w in nb {
            if (v as u32) < w {
                edges.push((v as Label + 1, w + 1));
            }
        }
    }
    LabeledGraph::from_sorted_unchecked(n as u32, edges)
}

/// Largest component order for which a canonical form is computed.
const CANONICAL_MAX_ORDER: usize = 9;
const CANONICAL_MAX_PERMUTATIONS: u64 = 50_000;

/// Lexicographically least edge list over all relabelings that sort vertices by
/// (degree, loops). `None` when the graph is too large to canonize cheaply.
fn canonical_key(n: usize, edges: &[(u32, u32)]) -> Option<Vec<u32>> {
    if n > CANONICAL_MAX_ORDER {
        return None;
    }
    let mut degree = vec![0u32; n];
    let mut loops = vec![0u32; n];
    for &(u, v) in edges {
        degree[u as usize] += 1;
        degree[v as usize] += 1;
        if u == v {
            loops[u as usize] += 1;
        }
    }
    let mut vertices: Vec<usize> = (0..n).collect();
    vertices.sort_by_key(|&v| std::cmp::Reverse((degree[v], loops[v])));
    // classes of equal signature, in order
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &v in &vertices {
        match classes.last_mut() {
            Some(c) if (degree[c[0]], loops[c[0]]) == (degree[v], loops[v]) => c.push(v),
            _ => classes.push(vec![v]),
        }
    }
    let perms: u64 = classes
        .iter()
        .map(|c| (1..=c.len() as u64).product::<u64>())
        .product();
    if perms > CANONICAL_MAX_PERMUTATIONS {
        return None;
    }
    let mut best: Option<Vec<u32>> = None;
    let mut position = vec![0u32; n];
    let mut slots: Vec<usize> = classes.iter().flatten().copied().collect();
    let starts: Vec<usize> = classes
        .iter()
        .scan(0, |acc, c| {
            let s = *acc;
            *acc += c.len();
            Some(s)
        })
        .collect();
    permute_classes(&classes, &starts, 0, &mut slots, &mut |order| {
        for (p, &v) in order.iter().enumerate() {
            position[v] = p as u32;
        }
        let mut list: Vec<u32> = edges
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (position[u as usize], position[v as usize]);
                a.min(b) * 64 + a.max(b)
            })
            .collect();
        list.sort_unstable();
        if best.as_ref().map_or(true, |b| list < *b) {
            best = Some(list);
        }
    });
    let mut key = vec![n as u32];
    key.extend(best.unwrap_or_default());
    Some(key)
}

fn permute_classes(
    classes: &[Vec<usize>],
    starts: &[usize],
    class: usize,
    slots: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if class == classes.len() {
        visit(slots);
        return;
    }
    let s = starts[class];
    let len = classes[class].len();
    permute_range(slots, s, s + len, &mut |slots| {
        permute_classes(classes, starts, class + 1, slots, visit)
    });
}

fn permute_range(
    slots: &mut Vec<usize>,
    from: usize,
    to: usize,
    visit: &mut dyn FnMut(&mut Vec<usize>),
) {
    if to - from <= 1 {
        visit(slots);
        return;
    }
    for i in from..to {
        slots.swap(from, i);
        permute_range(slots, from + 1, to, visit);
        slots.swap(from, i);
    }
}
