//! Weighted graphs, rooted trees and matchings.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub w: f64,
}

impl Edge {
    /// The endpoint that is not `x`.
    pub fn other(&self, x: usize) -> usize {
        if self.u == x {
            self.v
        } else {
            self.u
        }
    }
}

/// Finite simple undirected graph with real edge weights.
///
/// Directed edges are numbered `2e` for `(edges[e].u -> edges[e].v)` and
/// `2e + 1` for the reverse orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl WeightedGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a simple graph, rejecting self loops, duplicates and
    /// out-of-range endpoints.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut g = Self::empty(n);
        let mut seen = HashSet::new();
        for (u, v, w) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { vertex: x, n });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(Error::DuplicateEdge { u, v });
            }
            if !w.is_finite() {
                return Err(Error::validation(
                    "edge weight",
                    format!("{{{u}, {v}}} has weight {w}"),
                ));
            }
            g.push_edge(u, v, w);
        }
        Ok(g)
    }

    /// Path `0 - 1 - ... - (k)` with the given edge weights.
    pub fn path(weights: &[f64]) -> Self {
        let mut g = Self::empty(weights.len() + 1);
        for (i, &w) in weights.iter().enumerate() {
            g.push_edge(i, i + 1, w);
        }
        g
    }

    /// Caller guarantees simplicity.
    pub(crate) fn push_edge(&mut self, u: usize, v: usize, w: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { u, v, w });
        self.adj[u].push((v, id));
        self.adj[v].push((u, id));
        id
    }

    pub(crate) fn push_vertex(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.n += 1;
        self.n - 1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> Edge {
        self.edges[id]
    }

    /// `(neighbor, edge id)` pairs of `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            2.0 * self.edges.len() as f64 / self.n as f64
        }
    }

    pub fn find_edge(&self, u: usize, v: usize) -> Option<usize> {
        if u >= self.n || v >= self.n {
            return None;
        }
        let (a, b) = if self.adj[u].len() <= self.adj[v].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adj[a].iter().find(|&&(x, _)| x == b).map(|&(_, e)| e)
    }

    /// Index of the directed edge `(from -> other end)` of edge `e`.
    pub fn directed_index(&self, e: usize, from: usize) -> usize {
        if self.edges[e].u == from {
            2 * e
        } else {
            2 * e + 1
        }
    }

    /// `(tail, head)` of a directed edge index.
    pub fn directed_endpoints(&self, d: usize) -> (usize, usize) {
        let e = self.edges[d / 2];
        if d % 2 == 0 {
            (e.u, e.v)
        } else {
            (e.v, e.u)
        }
    }

    pub fn components(&self) -> Vec<Component> {
        let mut label = vec![usize::MAX; self.n];
        let mut out = Vec::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut vertices = vec![s];
            label[s] = id;
            let mut head = 0;
            while head < vertices.len() {
                let v = vertices[head];
                head += 1;
                for &(u, _) in &self.adj[v] {
                    if label[u] == usize::MAX {
                        label[u] = id;
                        vertices.push(u);
                    }
                }
            }
            out.push(Component {
                vertices,
                edges: Vec::new(),
            });
        }
        for (e, edge) in self.edges.iter().enumerate() {
            out[label[edge.u]].edges.push(e);
        }
        out
    }

    pub fn is_forest(&self) -> bool {
        self.components()
            .iter()
            .all(|c| c.edges.len() + 1 == c.vertices.len())
    }

    /// Subgraph induced by `vertices` (in the given order) keeping the listed
    /// edges. Returns the local graph and the local-to-global edge map.
    pub fn restrict(&self, vertices: &[usize], edges: &[usize]) -> (WeightedGraph, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut g = WeightedGraph::empty(vertices.len());
        let mut edge_map = Vec::with_capacity(edges.len());
        for &e in edges {
            let Edge { u, v, w } = self.edges[e];
            debug_assert!(local[u] != usize::MAX && local[v] != usize::MAX);
            g.push_edge(local[u], local[v], w);
            edge_map.push(e);
        }
        (g, edge_map)
    }
}

/// Connected component: vertex list (BFS order) and edge ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Component {
    /// Number of independent cycles, `|E| - |V| + 1`.
    pub fn cycle_rank(&self) -> usize {
        (self.edges.len() + 1).saturating_sub(self.vertices.len())
    }
}

/// A tree is rooted either at a vertex or at a directed edge `(o-, o+)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Root {
    Vertex(usize),
    Edge(usize, usize),
}

/// Finite rooted tree.
///
/// `frontier[v]` marks vertices whose subtree pointing away from the root
/// was cut off by a depth truncation; messages into them are unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct RootedTree {
    graph: WeightedGraph,
    root: Root,
    frontier: Vec<bool>,
}

impl RootedTree {
    pub fn new(graph: WeightedGraph, root: Root) -> Result<Self> {
        let frontier = vec![false; graph.n()];
        Self::with_frontier(graph, root, frontier)
    }

    pub fn with_frontier(graph: WeightedGraph, root: Root, frontier: Vec<bool>) -> Result<Self> {
        let n = graph.n();
        match root {
            Root::Vertex(v) if v >= n => return Err(Error::VertexOutOfRange { vertex: v, n }),
            Root::Edge(a, b) if graph.find_edge(a, b).is_none() => {
                return Err(Error::validation(
                    "root",
                    format!("({a}, {b}) is not an edge"),
                ))
            }
            _ => {}
        }
        if n == 0 {
            return Err(Error::validation(
                "tree",
                "a rooted tree needs at least one vertex",
            ));
        }
        if graph.edge_count() != n - 1 {
            return Err(if graph.edge_count() >= n {
                Error::CycleDetected
            } else {
                Error::Disconnected
            });
        }
        if graph.components().len() != 1 {
            return Err(Error::CycleDetected);
        }
        if frontier.len() != n {
            return Err(Error::validation(
                "frontier",
                "length must equal the vertex count",
            ));
        }
        Ok(Self {
            graph,
            root,
            frontier,
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn root(&self) -> Root {
        self.root
    }

    pub fn frontier(&self) -> &[bool] {
        &self.frontier
    }

    /// Root edge id when edge-rooted.
    pub fn root_edge(&self) -> Option<usize> {
        match self.root {
            Root::Edge(a, b) => self.graph.find_edge(a, b),
            Root::Vertex(_) => None,
        }
    }

    /// Distance of each vertex to the root (both ends of a root edge have
    /// depth 0).
    pub fn depths(&self) -> Vec<usize> {
        let n = self.graph.n();
        let mut depth = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        match self.root {
            Root::Vertex(v) => {
                depth[v] = 0;
                queue.push_back(v);
            }
            Root::Edge(a, b) => {
                depth[a] = 0;
                depth[b] = 0;
                queue.push_back(a);
                queue.push_back(b);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &(u, _) in self.graph.neighbors(v) {
                if depth[u] == usize::MAX {
                    depth[u] = depth[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        depth
    }
}

/// Set of edges, no two sharing a vertex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    edge_ids: Vec<usize>,
    partner: Vec<Option<usize>>,
}

impl Matching {
    pub fn empty(n: usize) -> Self {
        Self {
            edge_ids: Vec::new(),
            partner: vec![None; n],
        }
    }

    pub fn from_edge_ids(g: &WeightedGraph, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut m = Self::empty(g.n());
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        for &e in &ids {
            if e >= g.edge_count() {
                return Err(Error::validation(
                    "matching",
                    format!("edge id {e} out of range"),
                ));
            }
            let Edge { u, v, .. } = g.edge(e);
            for x in [u, v] {
                if m.partner[x].is_some() {
                    return Err(Error::InvalidMatching { vertex: x });
                }
            }
            m.partner[u] = Some(v);
            m.partner[v] = Some(u);
        }
        m.edge_ids = ids;
        Ok(m)
    }

    /// From vertex pairs; every pair must be an edge of `g`.
    pub fn from_pairs(g: &WeightedGraph, pairs: &[[usize; 2]]) -> Result<Self> {
        let ids = pairs
            .iter()
            .map(|&[u, v]| {
                g.find_edge(u, v).ok_or_else(|| {
                    Error::validation("matching", format!("{{{u}, {v}}} is not an edge"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_edge_ids(g, ids)
    }

    pub fn edge_ids(&self) -> &[usize] {
        &self.edge_ids
    }

    pub fn len(&self) -> usize {
        self.edge_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_ids.is_empty()
    }

    pub fn partner(&self, v: usize) -> Option<usize> {
        self.partner[v]
    }

    pub fn is_matched(&self, v: usize) -> bool {
        self.partner[v].is_some()
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.edge_ids.binary_search(&e).is_ok()
    }

    pub fn total_weight(&self, g: &WeightedGraph) -> f64 {
        self.edge_ids.iter().map(|&e| g.edge(e).w).sum()
    }

    pub fn pairs(&self, g: &WeightedGraph) -> Vec<[usize; 2]> {
        self.edge_ids
            .iter()
            .map(|&e| {
                let Edge { u, v, .. } = g.edge(e);
                [u.min(v), u.max(v)]
            })
            .collect()
    }

    /// Re-checks the invariant against `g`.
    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        if self.partner.len() != g.n() {
            return Err(Error::validation(
                "matching",
                "vertex count differs from the graph",
            ));
        }
        let mut seen = vec![false; g.n()];
        for &e in &self.edge_ids {
            if e >= g.edge_count() {
                return Err(Error::validation(
                    "matching",
                    format!("edge id {e} out of range"),
                ));
            }
            let Edge { u, v, .. } = g.edge(e);
            for x in [u, v] {
                if std::mem::replace(&mut seen[x], true) {
                    return Err(Error::InvalidMatching { vertex: x });
                }
            }
            if self.partner[u] != Some(v) || self.partner[v] != Some(u) {
                return Err(Error::validation(
                    "matching",
                    "partner map disagrees with edges",
                ));
            }
        }
        Ok(())
    }
}

/// Summary of a matching on a finite graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchingStats {
    pub total_weight: f64,
    pub matched_edge_fraction: f64,
    pub matched_vertex_fraction: f64,
    /// Matched weight seen from a uniform vertex.
    pub perf_v: f64,
    /// Matched weight seen from a uniform directed edge.
    pub perf_e: f64,
    pub mean_degree: f64,
}

impl MatchingStats {
    /// `|perf_V - mean_degree * perf_E|` relative to `max(|perf_V|, tiny)`.
    pub fn identity_defect(&self) -> f64 {
        let rhs = self.mean_degree * self.perf_e;
        let scale = self.perf_v.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        if self.perf_v == rhs {
            0.0
        } else {
            (self.perf_v - rhs).abs() / scale
        }
    }
}

pub fn matching_stats(g: &WeightedGraph, m: &Matching) -> Result<MatchingStats> {
    m.validate(g)?;
    let n = g.n();
    let e = g.edge_count();
    // perf_V sums over vertices, perf_E over directed edges, so the
    // proportionality identity is checked rather than assumed.
    let vertex_sum: f64 = (0..n)
        .map(|v| {
            g.neighbors(v)
                .iter()
                .filter(|&&(_, id)| m.contains_edge(id))
                .map(|&(_, id)| g.edge(id).w)
                .sum::<f64>()
        })
        .sum();
    let directed_sum: f64 = (0..2 * e)
        .filter(|d| m.contains_edge(d / 2))
        .map(|d| g.edge(d / 2).w)
        .sum();
    let ratio = |a: f64, b: usize| if b == 0 { 0.0 } else { a / b as f64 };
    Ok(MatchingStats {
        total_weight: m.total_weight(g),
        matched_edge_fraction: ratio(m.len() as f64, e),
        matched_vertex_fraction: ratio(2.0 * m.len() as f64, n),
        perf_v: ratio(vertex_sum, n),
        perf_e: ratio(directed_sum, 2 * e),
        mean_degree: g.mean_degree(),
    })
}
