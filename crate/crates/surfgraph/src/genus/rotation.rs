//! Rotation systems, face tracing and the branch-and-bound minimum genus search.

use serde::{Deserialize, Serialize};

use super::GenusError;
use crate::graph::{ComponentView, Label, LabeledMultigraph};

/// Dart `(edge, side)`: `edge` indexes `LabeledMultigraph::expanded_edges`,
/// side 0 sits at the first endpoint and side 1 at the second.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dart(pub u32, pub u8);

impl Dart {
    fn index(self) -> usize {
        2 * self.0 as usize + self.1 as usize
    }

    fn from_index(i: usize) -> Self {
        Dart((i / 2) as u32, (i % 2) as u8)
    }
}

/// Cyclic order of darts around each vertex, indexed by `label - 1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationSystem {
    pub rotations: Vec<Vec<Dart>>,
}

impl RotationSystem {
    /// Darts listed in the order they are attached, for every vertex.
    pub fn identity(m: &LabeledMultigraph) -> Self {
        let mut rotations = vec![Vec::new(); m.vertex_count() as usize];
        for (e, &(u, v)) in m.expanded_edges().iter().enumerate() {
            rotations[u as usize - 1].push(Dart(e as u32, 0));
            rotations[v as usize - 1].push(Dart(e as u32, 1));
        }
        RotationSystem { rotations }
    }

    /// Successor permutation on dart indices after validating against `m`.
    fn successor(&self, m: &LabeledMultigraph) -> Result<Vec<usize>, GenusError> {
        let edges = m.expanded_edges();
        if self.rotations.len() != m.vertex_count() as usize {
            return Err(GenusError::InvalidRotation("one cyclic order per vertex".into()));
        }
        let mut succ = vec![usize::MAX; 2 * edges.len()];
        for (v, order) in self.rotations.iter().enumerate() {
            let label = v as Label + 1;
            for (i, &d) in order.iter().enumerate() {
                let Some(&(a, b)) = edges.get(d.0 as usize) else {
                    return Err(GenusError::InvalidRotation(format!("no edge {}", d.0)));
                };
                let at = if d.1 == 0 { a } else { b };
                if d.1 > 1 || at != label {
                    return Err(GenusError::InvalidRotation(format!(
                        "dart {d:?} is not at vertex {label}"
                    )));
                }
                if succ[d.index()] != usize::MAX {
                    return Err(GenusError::InvalidRotation(format!("dart {d:?} repeated")));
                }
                succ[d.index()] = order[(i + 1) % order.len()].index();
            }
        }
        if succ.contains(&usize::MAX) {
            return Err(GenusError::InvalidRotation("some dart is missing".into()));
        }
        Ok(succ)
    }
}

/// Number of faces of the embedding of a connected multigraph given by `r`.
pub fn faces(m: &LabeledMultigraph, r: &RotationSystem) -> Result<usize, GenusError> {
    if ComponentView::of_multigraph(m).components.len() > 1 {
        return Err(GenusError::Disconnected);
    }
    let succ = r.successor(m)?;
    if succ.is_empty() {
        return Ok(1);
    }
    Ok(count_orbits(&succ))
}

/// Orbits of `d ↦ succ(twin(d))`.
fn count_orbits(succ: &[usize]) -> usize {
    let mut seen = vec![false; succ.len()];
    let mut orbits = 0;
    for start in 0..succ.len() {
        if seen[start] {
            continue;
        }
        orbits += 1;
        let mut d = start;
        while !seen[d] {
            seen[d] = true;
            d = succ[d ^ 1];
        }
    }
    orbits
}

/// Genus of the embedding given by `r`, summed over components.
pub fn embedding_genus(m: &LabeledMultigraph, r: &RotationSystem) -> Result<u32, GenusError> {
    let succ = r.successor(m)?;
    let view = ComponentView::of_multigraph(m);
    let f = count_orbits(&succ) as i64;
    let isolated = view.components.iter().filter(|c| c.edges == 0).count() as i64;
    let k = view.components.len() as i64;
    let v = m.vertex_count() as i64;
    let e = m.edge_count() as i64;
    // Euler per component: 2 - V_i + E_i - F_i = 2 g_i; isolated vertices have one face
    let twice = 2 * k - v + e - (f + isolated);
    debug_assert!(twice >= 0 && twice % 2 == 0);
    Ok((twice / 2) as u32)
}

/// Outcome of a search on one connected component.
pub(crate) struct SearchOutcome {
    pub genus: u32,
    /// Successor permutation on local dart indices.
    pub successor: Vec<usize>,
}

const UNSET: u32 = u32::MAX;

struct Undo {
    head: u32,
    tail: u32,
    other_head: u32,
    other_tail: u32,
    len_head: u32,
    len_tail: u32,
    long_paths: u32,
    short_darts: u32,
}

/// Branch-and-bound over rotation systems of a connected multigraph given by
/// local 0-based edge endpoints.
pub(crate) struct GenusSearch {
    vertex_count: usize,
    edge_count: usize,
    darts_at: Vec<Vec<u32>>,
    order: Vec<usize>,
    succ: Vec<u32>,
    other_end: Vec<u32>,
    path_len: Vec<u32>,
    trail: Vec<Undo>,
    long_paths: u32,
    short_darts: u32,
    defined: u32,
    closed_faces: u32,
    closed_darts: u32,
    min_face: u32,
    best: u32,
    stop_at: u32,
    best_succ: Option<Vec<u32>>,
    nodes: u64,
    budget: Option<u64>,
    exhausted: bool,
}

impl GenusSearch {
    /// `edges` are 0-based endpoints of a connected multigraph on `n` vertices.
    pub(crate) fn new(n: usize, edges: &[(u32, u32)], budget: Option<u64>) -> Self {
        let d = 2 * edges.len();
        let mut darts_at = vec![Vec::new(); n];
        for (e, &(u, v)) in edges.iter().enumerate() {
            darts_at[u as usize].push(2 * e as u32);
            darts_at[v as usize].push(2 * e as u32 + 1);
        }
        let has_loop = edges.iter().any(|&(u, v)| u == v);
        let mut sorted: Vec<(u32, u32)> =
            edges.iter().map(|&(u, v)| (u.min(v), u.max(v))).collect();
        sorted.sort_unstable();
        let has_parallel = sorted.windows(2).any(|w| w[0] == w[1]);
        let min_face = if has_loop {
            1
        } else if has_parallel || edges.len() == 1 {
            2
        } else {
            3
        };
        let order = search_order(n, edges, &darts_at);
        let cycle_rank = edges.len() as i64 - n as i64 + 1;
        GenusSearch {
            vertex_count: n,
            edge_count: edges.len(),
            darts_at,
            order,
            succ: vec![UNSET; d],
            other_end: (0..d as u32).collect(),
            path_len: vec![1; d],
            trail: Vec::new(),
            long_paths: if min_face == 1 { d as u32 } else { 0 },
            short_darts: if min_face == 1 { 0 } else { d as u32 },
            defined: 0,
            closed_faces: 0,
            closed_darts: 0,
            min_face,
            best: (cycle_rank.max(0) / 2) as u32 + 1,
            stop_at: 0,
            best_succ: None,
            nodes: 0,
            budget,
            exhausted: false,
        }
    }

    /// Euler lower bound using the shortest possible face.
    pub(crate) fn euler_lower_bound(&self) -> u32 {
        let d = 2 * self.edge_count as i64;
        let f_max = d / self.min_face as i64;
        let twice = 2 - self.vertex_count as i64 + self.edge_count as i64 - f_max.max(1);
        ((twice.max(0) + 1) / 2) as u32
    }

    /// Minimum genus, given a known lower bound. `None` when the node budget runs out.
    pub(crate) fn minimum(mut self, known_lower: u32) -> Option<SearchOutcome> {
        if self.edge_count == 0 {
            return Some(SearchOutcome { genus: 0, successor: Vec::new() });
        }
        self.stop_at = known_lower.max(self.euler_lower_bound());
        self.branch(0, UNSET, &mut Vec::new());
        if self.exhausted {
            return None;
        }
        let succ = self.best_succ.expect("some rotation system was completed");
        Some(SearchOutcome {
            genus: self.best,
            successor: succ.into_iter().map(|x| x as usize).collect(),
        })
    }

    fn done(&self) -> bool {
        self.exhausted || self.best <= self.stop_at
    }

    /// Faces still to close are built from open paths; a path at least as long
    /// as the shortest face can only supply one face, shorter paths must pool.
    fn upper_faces(&self) -> u32 {
        let d = 2 * self.edge_count as u32;
        let open_paths = d - self.defined;
        self.closed_faces + open_paths.min(self.long_paths + self.short_darts / self.min_face)
    }

    fn forget_path(&mut self, len: u32) {
        if len >= self.min_face {
            self.long_paths -= 1;
        } else {
            self.short_darts -= len;
        }
    }

    fn add_path(&mut self, len: u32) {
        if len >= self.min_face {
            self.long_paths += 1;
        } else {
            self.short_darts += len;
        }
    }

    fn lower_genus(&self) -> u32 {
        let twice = 2 - self.vertex_count as i64 + self.edge_count as i64
            - self.upper_faces() as i64;
        ((twice.max(0) + 1) / 2) as u32
    }

    /// Sets `succ[d] = x`, i.e. the face walk goes from `twin(d)` to `x`.
    fn link(&mut self, d: u32, x: u32) {
        let a = d ^ 1;
        let head = self.other_end[a as usize];
        let tail = self.other_end[x as usize];
        self.trail.push(Undo {
            head,
            tail,
            other_head: self.other_end[head as usize],
            other_tail: self.other_end[tail as usize],
            len_head: self.path_len[head as usize],
            len_tail: self.path_len[tail as usize],
            long_paths: self.long_paths,
            short_darts: self.short_darts,
        });
        self.succ[d as usize] = x;
        self.defined += 1;
        let len_a = self.path_len[head as usize];
        if head == x {
            self.closed_faces += 1;
            self.closed_darts += len_a;
            self.forget_path(len_a);
        } else {
            let len_x = self.path_len[x as usize];
            self.forget_path(len_a);
            self.forget_path(len_x);
            self.add_path(len_a + len_x);
            self.other_end[head as usize] = tail;
            self.other_end[tail as usize] = head;
            self.path_len[head as usize] = len_a + len_x;
            self.path_len[tail as usize] = len_a + len_x;
        }
    }

    fn unlink(&mut self, d: u32) {
        let u = self.trail.pop().expect("trail matches links");
        let x = self.succ[d as usize];
        self.succ[d as usize] = UNSET;
        self.defined -= 1;
        if u.head == x {
            self.closed_faces -= 1;
            self.closed_darts -= u.len_head;
        }
        self.other_end[u.tail as usize] = u.other_tail;
        self.other_end[u.head as usize] = u.other_head;
        self.path_len[u.tail as usize] = u.len_tail;
        self.path_len[u.head as usize] = u.len_head;
        self.long_paths = u.long_paths;
        self.short_darts = u.short_darts;
    }

    /// Builds the rotation at `order[pos]` one successor at a time. `cur` is the
    /// last dart placed at this vertex (UNSET before the first), `rest` the darts
    /// not yet placed.
    fn branch(&mut self, pos: usize, cur: u32, rest: &mut Vec<u32>) {
        if self.done() {
            return;
        }
        if pos == self.order.len() {
            let genus = self.lower_genus();
            if genus < self.best {
                self.best = genus;
                self.best_succ = Some(self.succ.clone());
            }
            return;
        }
        let v = self.order[pos];
        if cur == UNSET {
            let darts = self.darts_at[v].clone();
            let mut rest: Vec<u32> = darts[1..].to_vec();
            self.branch(pos, darts[0], &mut rest);
            return;
        }
        if rest.is_empty() {
            let first = self.darts_at[v][0];
            self.link(cur, first);
            if self.lower_genus() < self.best {
                self.branch(pos + 1, UNSET, &mut Vec::new());
            }
            self.unlink(cur);
            return;
        }
        for i in 0..rest.len() {
            self.nodes += 1;
            if self.budget.is_some_and(|b| self.nodes > b) {
                self.exhausted = true;
                return;
            }
            let x = rest.swap_remove(i);
            self.link(cur, x);
            if self.lower_genus() < self.best {
                self.branch(pos, x, rest);
            }
            self.unlink(cur);
            rest.push(x);
            let last = rest.len() - 1;
            rest.swap(i, last);
            if self.done() {
                return;
            }
        }
    }
}

/// Vertex order: highest degree first, then repeatedly the vertex with the most
/// darts pointing back into already ordered vertices.
fn search_order(n: usize, edges: &[(u32, u32)], darts_at: &[Vec<u32>]) -> Vec<usize> {
    let mut placed = vec![false; n];
    let mut weight = vec![0usize; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| !placed[v])
            .max_by_key(|&v| (weight[v], darts_at[v].len(), std::cmp::Reverse(v)))
            .expect("unplaced vertex remains");
        placed[v] = true;
        order.push(v);
        for &(a, b) in edges {
            if a as usize == v && !placed[b as usize] {
                weight[b as usize] += 1;
            } else if b as usize == v && !placed[a as usize] {
                weight[a as usize] += 1;
            }
        }
    }
    order
}

/// Converts a local successor permutation back to cyclic dart orders.
pub(crate) fn rotations_from_successor(
    darts_at: impl Fn(usize) -> Vec<usize>,
    n: usize,
    succ: &[usize],
) -> Vec<Vec<usize>> {
    (0..n)
        .map(|v| {
            let at = darts_at(v);
            let Some(&start) = at.first() else {
                return Vec::new();
            };
            let mut cycle = vec![start];
            let mut d = succ[start];
            while d != start {
                cycle.push(d);
                d = succ[d];
            }
            cycle
        })
        .collect()
}

pub(crate) fn dart_from_index(i: usize) -> Dart {
    Dart::from_index(i)
}
