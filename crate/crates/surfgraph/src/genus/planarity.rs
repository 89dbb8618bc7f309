//! Left-right planarity test, iterative so that it copes with large sparse graphs.

use crate::graph::{Csr, LabeledGraph};

const NONE: u32 = u32::MAX;

/// Planarity of a simple graph.
pub fn is_planar(g: &LabeledGraph) -> bool {
    let n = g.vertex_count() as usize;
    let m = g.edge_count();
    if n > 2 && m > 3 * n - 6 {
        return false;
    }
    let edges: Vec<(u32, u32)> = g.edges().iter().map(|&(u, v)| (u - 1, v - 1)).collect();
    LrState::new(n, &edges).run()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Interval {
    low: u32,
    high: u32,
}

impl Interval {
    const EMPTY: Interval = Interval { low: NONE, high: NONE };

    fn is_empty(&self) -> bool {
        self.low == NONE && self.high == NONE
    }
}

#[derive(Clone, Copy, Debug)]
struct ConflictPair {
    left: Interval,
    right: Interval,
}

impl ConflictPair {
    fn swap(&mut self) {
        std::mem::swap(&mut self.left, &mut self.right);
    }
}

struct LrState {
    n: usize,
    adj: Csr,
    height: Vec<u32>,
    parent_edge: Vec<u32>,
    target: Vec<u32>,
    source: Vec<u32>,
    oriented: Vec<bool>,
    lowpt: Vec<u32>,
    lowpt2: Vec<u32>,
    nesting_depth: Vec<u64>,
    out: Vec<Vec<u32>>,
    roots: Vec<u32>,
    reference: Vec<u32>,
    lowpt_edge: Vec<u32>,
    stack_bottom: Vec<usize>,
    stack: Vec<ConflictPair>,
}

impl LrState {
    fn new(n: usize, edges: &[(u32, u32)]) -> Self {
        let m = edges.len();
        LrState {
            n,
            adj: Csr::new(n, edges),
            height: vec![NONE; n],
            parent_edge: vec![NONE; n],
            target: vec![NONE; m],
            source: vec![NONE; m],
            oriented: vec![false; m],
            lowpt: vec![0; m],
            lowpt2: vec![0; m],
            nesting_depth: vec![0; m],
            out: vec![Vec::new(); n],
            roots: Vec::new(),
            reference: vec![NONE; m],
            lowpt_edge: vec![NONE; m],
            stack_bottom: vec![0; m],
            stack: Vec::new(),
        }
    }

    fn run(mut self) -> bool {
        for v in 0..self.n {
            if self.height[v] == NONE {
                self.height[v] = 0;
                self.roots.push(v as u32);
                self.orient(v);
            }
        }
        for v in 0..self.n {
            let depth = &self.nesting_depth;
            self.out[v].sort_by_key(|&e| depth[e as usize]);
        }
        let roots = std::mem::take(&mut self.roots);
        roots.into_iter().all(|r| self.test(r as usize))
    }

    /// Depth-first orientation computing lowpoints and nesting depths.
    fn orient(&mut self, root: usize) {
        let mut dfs = vec![root];
        // skip_init is per adjacency slot since it marks a direction
        let mut skip_init = vec![false; self.adj.targets.len()];
        let mut ind = IndexCursor::new(self.n);
        while let Some(v) = dfs.pop() {
            let e = self.parent_edge[v];
            let range = self.adj.range(v);
            let mut i = range.start + ind.get(v);
            while i < range.end {
                let w = self.adj.targets[i] as usize;
                let vw = self.adj.edge_ids[i] as usize;
                if !skip_init[i] {
                    if self.oriented[vw] {
                        ind.bump(v);
                        i += 1;
                        continue;
                    }
                    self.oriented[vw] = true;
                    self.source[vw] = v as u32;
                    self.target[vw] = w as u32;
                    self.out[v].push(vw as u32);
                    self.lowpt[vw] = self.height[v];
                    self.lowpt2[vw] = self.height[v];
                    if self.height[w] == NONE {
                        self.parent_edge[w] = vw as u32;
                        self.height[w] = self.height[v] + 1;
                        dfs.push(v);
                        dfs.push(w);
                        skip_init[i] = true;
                        break;
                    }
                    self.lowpt[vw] = self.height[w];
                }
                self.nesting_depth[vw] = 2 * self.lowpt[vw] as u64
                    + u64::from(self.lowpt2[vw] < self.height[v]);
                if e != NONE {
                    let e = e as usize;
                    if self.lowpt[vw] < self.lowpt[e] {
                        self.lowpt2[e] = self.lowpt[e].min(self.lowpt2[vw]);
                        self.lowpt[e] = self.lowpt[vw];
                    } else if self.lowpt[vw] > self.lowpt[e] {
                        self.lowpt2[e] = self.lowpt2[e].min(self.lowpt[vw]);
                    } else {
                        self.lowpt2[e] = self.lowpt2[e].min(self.lowpt2[vw]);
                    }
                }
                ind.bump(v);
                i += 1;
            }
        }
    }

    fn test(&mut self, root: usize) -> bool {
        let mut dfs = vec![root];
        let mut ind = IndexCursor::new(self.n);
        let mut skip_init = vec![false; self.lowpt.len()];
        while let Some(v) = dfs.pop() {
            let e = self.parent_edge[v];
            let mut skip_final = false;
            while ind.get(v) < self.out[v].len() {
                let ei = self.out[v][ind.get(v)] as usize;
                let w = self.target[ei] as usize;
                if !skip_init[ei] {
                    self.stack_bottom[ei] = self.stack.len();
                    if ei as u32 == self.parent_edge[w] {
                        dfs.push(v);
                        dfs.push(w);
                        skip_init[ei] = true;
                        skip_final = true;
                        break;
                    }
                    self.lowpt_edge[ei] = ei as u32;
                    self.stack.push(ConflictPair {
                        left: Interval::EMPTY,
                        right: Interval { low: ei as u32, high: ei as u32 },
                    });
                }
                if self.lowpt[ei] < self.height[v] {
                    if ei as u32 == self.out[v][0] {
                        if e != NONE {
                            self.lowpt_edge[e as usize] = self.lowpt_edge[ei];
                        }
                    } else if !self.add_constraints(ei, e as usize) {
                        return false;
                    }
                }
                ind.bump(v);
            }
            if !skip_final && e != NONE {
                self.remove_back_edges(e as usize);
            }
        }
        true
    }

    fn conflicting(&self, i: &Interval, b: usize) -> bool {
        !i.is_empty() && self.lowpt[i.high as usize] > self.lowpt[b]
    }

    fn lowest(&self, p: &ConflictPair) -> u32 {
        if p.left.is_empty() {
            self.lowpt[p.right.low as usize]
        } else if p.right.is_empty() {
            self.lowpt[p.left.low as usize]
        } else {
            self.lowpt[p.left.low as usize].min(self.lowpt[p.right.low as usize])
        }
    }

    fn set_ref(&mut self, edge: u32, to: u32) {
        if edge != NONE {
            self.reference[edge as usize] = to;
        }
    }

    fn add_constraints(&mut self, ei: usize, e: usize) -> bool {
        let mut p = ConflictPair {
            left: Interval::EMPTY,
            right: Interval::EMPTY,
        };
        // merge return edges of ei into p.right
        loop {
            let Some(mut q) = self.stack.pop() else { break };
            if !q.left.is_empty() {
                q.swap();
            }
            if !q.left.is_empty() {
                return false;
            }
            if self.lowpt[q.right.low as usize] > self.lowpt[e] {
                if p.right.is_empty() {
                    p.right = q.right;
                } else {
                    self.set_ref(p.right.low, q.right.high);
                }
                p.right.low = q.right.low;
            } else {
                self.set_ref(q.right.low, self.lowpt_edge[e]);
            }
            if self.stack.len() <= self.stack_bottom[ei] {
                break;
            }
        }
        // merge conflicting return edges of earlier siblings into p.left
        while let Some(top) = self.stack.last().copied() {
            if !(self.conflicting(&top.left, ei) || self.conflicting(&top.right, ei)) {
                break;
            }
            let mut q = self.stack.pop().expect("checked non-empty");
            if self.conflicting(&q.right, ei) {
                q.swap();
            }
            if self.conflicting(&q.right, ei) {
                return false;
            }
            self.set_ref(p.right.low, q.right.high);
            if q.right.low != NONE {
                p.right.low = q.right.low;
            }
            if p.left.is_empty() {
                p.left = q.left;
            } else {
                self.set_ref(p.left.low, q.left.high);
            }
            p.left.low = q.left.low;
        }
        if !(p.left.is_empty() && p.right.is_empty()) {
            self.stack.push(p);
        }
        true
    }

    fn remove_back_edges(&mut self, e: usize) {
        let u = self.source[e];
        let hu = self.height[u as usize];
        while let Some(top) = self.stack.last() {
            if self.lowest(top) != hu {
                break;
            }
            self.stack.pop();
        }
        if let Some(mut p) = self.stack.pop() {
            while p.left.high != NONE && self.target[p.left.high as usize] == u {
                p.left.high = self.reference[p.left.high as usize];
            }
            if p.left.high == NONE && p.left.low != NONE {
                self.reference[p.left.low as usize] = p.right.low;
                p.left.low = NONE;
            }
            while p.right.high != NONE && self.target[p.right.high as usize] == u {
                p.right.high = self.reference[p.right.high as usize];
            }
            if p.right.high == NONE && p.right.low != NONE {
                self.reference[p.right.low as usize] = p.left.low;
                p.right.low = NONE;
            }
            self.stack.push(p);
        }
        if self.lowpt[e] < hu {
            if let Some(top) = self.stack.last() {
                let (hl, hr) = (top.left.high, top.right.high);
                self.reference[e] = if hl != NONE
                    && (hr == NONE || self.lowpt[hl as usize] > self.lowpt[hr as usize])
                {
                    hl
                } else {
                    hr
                };
            }
        }
    }
}

/// Per-vertex position in an adjacency list, kept across DFS revisits.
struct IndexCursor(Vec<usize>);

impl IndexCursor {
    fn new(n: usize) -> Self {
        IndexCursor(vec![0; n])
    }
    fn get(&self, v: usize) -> usize {
        self.0[v]
    }
    fn bump(&mut self, v: usize) {
        self.0[v] += 1;
    }
}
