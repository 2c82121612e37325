//! Exact maximum-weight matchings: tree dynamic programming, branch and
//! bound, cycle-rank branching and the per-component driver.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Component, Matching, RootedTree, WeightedGraph};

/// Optimum value and a matching attaining it.
#[derive(Clone, Debug, PartialEq)]
pub struct Optimum {
    pub value: f64,
    pub matching: Matching,
}

/// Default edge bound per component for [`brute_force_opt`].
pub const BRUTE_FORCE_EDGES: usize = 24;

/// Maximum-weight matching of a forest by dynamic programming. The empty
/// matching is allowed, so the value is never negative.
pub fn forest_opt(g: &WeightedGraph) -> Result<Optimum> {
    let n = g.n();
    let mut parent_edge = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for s in 0..n {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let mut head = order.len();
        order.push(s);
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &(u, e) in g.neighbors(v) {
                if e == parent_edge[v] {
                    continue;
                }
                if visited[u] {
                    return Err(Error::CycleDetected);
                }
                visited[u] = true;
                parent_edge[u] = e;
                order.push(u);
            }
        }
    }
    // free[v]: best in v's subtree with v left unmatched there.
    // best[v]: best in v's subtree.
    let mut free = vec![0.0; n];
    let mut best = vec![0.0; n];
    let mut take = vec![usize::MAX; n];
    for &v in order.iter().rev() {
        let pe = parent_edge[v];
        let children = || g.neighbors(v).iter().filter(move |&&(_, e)| e != pe);
        let base: f64 = children().map(|&(c, _)| best[c]).sum();
        let mut top = base;
        for &(c, e) in children() {
            let cand = base - best[c] + free[c] + g.edge(e).w;
            if cand > top {
                top = cand;
                take[v] = e;
            }
        }
        free[v] = base;
        best[v] = top;
    }
    let value: f64 = (0..n)
        .filter(|&v| parent_edge[v] == usize::MAX)
        .map(|r| best[r])
        .sum();

    let mut selected = Vec::new();
    // available[v]: v is not already matched to its parent
    let mut available = vec![true; n];
    for &v in &order {
        if available[v] && take[v] != usize::MAX {
            let c = g.edge(take[v]).other(v);
            selected.push(take[v]);
            available[c] = false;
        }
    }
    Ok(Optimum {
        value,
        matching: Matching::from_edge_ids(g, selected)?,
    })
}

pub fn tree_opt(t: &RootedTree) -> Optimum {
    forest_opt(t.graph()).expect("rooted trees are acyclic")
}

/// Exact optimum by branch and bound, component by component.
///
/// Edges are tried in descending weight order; a branch is cut when its
/// value plus the total weight of remaining edges with both endpoints still
/// free cannot beat the incumbent. Edges of non-positive weight never help
/// and are skipped.
pub fn brute_force_opt(g: &WeightedGraph, max_edges: usize) -> Result<Optimum> {
    let mut selected = Vec::new();
    let mut value = 0.0;
    for comp in g.components() {
        if comp.edges.len() > max_edges {
            return Err(Error::Budget {
                what: format!(
                    "branch and bound on a component with {} edges",
                    comp.edges.len()
                ),
                limit: max_edges,
            });
        }
        let (v, ids) = branch_and_bound(g, &comp.edges);
        value += v;
        selected.extend(ids);
    }
    Ok(Optimum {
        value,
        matching: Matching::from_edge_ids(g, selected)?,
    })
}

fn branch_and_bound(g: &WeightedGraph, edges: &[usize]) -> (f64, Vec<usize>) {
    let mut order: Vec<usize> = edges
        .iter()
        .copied()
        .filter(|&e| g.edge(e).w > 0.0)
        .collect();
    order.sort_by(|&a, &b| g.edge(b).w.total_cmp(&g.edge(a).w));

    struct Search<'a> {
        g: &'a WeightedGraph,
        order: Vec<usize>,
        used: Vec<bool>,
        current: Vec<usize>,
        best_value: f64,
        best: Vec<usize>,
    }

    impl Search<'_> {
        fn bound(&self, from: usize) -> f64 {
            self.order[from..]
                .iter()
                .map(|&e| self.g.edge(e))
                .filter(|e| !self.used[e.u] && !self.used[e.v])
                .map(|e| e.w)
                .sum()
        }

        fn run(&mut self, i: usize, value: f64) {
            if value > self.best_value {
                self.best_value = value;
                self.best = self.current.clone();
            }
            if i == self.order.len() || value + self.bound(i) <= self.best_value {
                return;
            }
            let e = self.order[i];
            let edge = self.g.edge(e);
            if !self.used[edge.u] && !self.used[edge.v] {
                self.used[edge.u] = true;
                self.used[edge.v] = true;
                self.current.push(e);
                self.run(i + 1, value + edge.w);
                self.current.pop();
                self.used[edge.u] = false;
                self.used[edge.v] = false;
            }
            self.run(i + 1, value);
        }
    }

    let mut s = Search {
        g,
        order,
        used: vec![false; g.n()],
        current: Vec::new(),
        best_value: 0.0,
        best: Vec::new(),
    };
    s.run(0, 0.0);
    (s.best_value, s.best)
}

/// Exact optimum of a sparse graph by branching over the edges outside a
/// spanning forest: each such edge is either dropped or forced into the
/// matching (removing its endpoints), and the remaining forest is solved by
/// dynamic programming. Costs `2^k` forest solves for cycle rank `k`.
pub fn cycle_branch_opt(g: &WeightedGraph, max_rank: usize) -> Result<Optimum> {
    let mut dsu = Dsu::new(g.n());
    let (mut tree_edges, mut extra) = (Vec::new(), Vec::new());
    for (e, edge) in g.edges().iter().enumerate() {
        if dsu.union(edge.u, edge.v) {
            tree_edges.push(e);
        } else {
            extra.push(e);
        }
    }
    if extra.len() > max_rank {
        return Err(Error::Budget {
            what: format!("cycle branching over {} non-tree edges", extra.len()),
            limit: max_rank,
        });
    }
    let all: Vec<usize> = (0..g.n()).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u64..(1u64 << extra.len()) {
        let forced: Vec<usize> = (0..extra.len())
            .filter(|b| mask >> b & 1 == 1)
            .map(|b| extra[b])
            .collect();
        let mut removed = vec![false; g.n()];
        let mut disjoint = true;
        for &e in &forced {
            let edge = g.edge(e);
            for x in [edge.u, edge.v] {
                disjoint &= !std::mem::replace(&mut removed[x], true);
            }
        }
        if !disjoint {
            continue;
        }
        let kept: Vec<usize> = tree_edges
            .iter()
            .copied()
            .filter(|&e| !removed[g.edge(e).u] && !removed[g.edge(e).v])
            .collect();
        let (forest, map) = g.restrict(&all, &kept);
        let sub = forest_opt(&forest)?;
        let value = sub.value + forced.iter().map(|&e| g.edge(e).w).sum::<f64>();
        if best.as_ref().is_none_or(|(b, _)| value > *b) {
            let mut ids: Vec<usize> = sub.matching.edge_ids().iter().map(|&e| map[e]).collect();
            ids.extend(forced);
            best = Some((value, ids));
        }
    }
    let (value, ids) = best.expect("the empty branch always exists");
    Ok(Optimum {
        value,
        matching: Matching::from_edge_ids(g, ids)?,
    })
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComponentLimits {
    /// Largest cyclic component (in edges) handed to branch and bound.
    pub component_limit: usize,
    /// Largest cycle rank handled by cycle branching.
    pub max_cycle_rank: usize,
}

impl Default for ComponentLimits {
    fn default() -> Self {
        Self {
            component_limit: 30,
            max_cycle_rank: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ComponentMethod {
    TreeDp,
    CycleBranch,
    BranchAndBound,
}

#[derive(Clone, Debug)]
pub struct ComponentSolve {
    /// Total weight over solved components only.
    pub value: f64,
    pub matching: Matching,
    /// Fraction of edges lying in solved components (1 for edgeless graphs).
    pub solved_fraction: f64,
    pub excluded: Vec<Component>,
    pub methods: Vec<(usize, ComponentMethod)>,
}

impl ComponentSolve {
    pub fn is_complete(&self) -> bool {
        self.excluded.is_empty()
    }
}

/// Exact optimum per connected component. Trees are always solved by
/// dynamic programming; cyclic components go to cycle branching when their
/// cycle rank is small, else to branch and bound when they have at most
/// `component_limit` edges, else they are excluded and reported.
pub fn exact_opt_by_components(g: &WeightedGraph, limits: ComponentLimits) -> ComponentSolve {
    let comps = g.components();
    let results: Vec<(usize, Option<(ComponentMethod, Optimum, Vec<usize>)>)> = comps
        .par_iter()
        .enumerate()
        .map(|(i, comp)| {
            let (sub, edge_map) = g.restrict(&comp.vertices, &comp.edges);
            let rank = comp.cycle_rank();
            let solved = if rank == 0 {
                forest_opt(&sub).ok().map(|o| (ComponentMethod::TreeDp, o))
            } else if rank <= limits.max_cycle_rank {
                cycle_branch_opt(&sub, limits.max_cycle_rank)
                    .ok()
                    .map(|o| (ComponentMethod::CycleBranch, o))
            } else if comp.edges.len() <= limits.component_limit {
                brute_force_opt(&sub, limits.component_limit)
                    .ok()
                    .map(|o| (ComponentMethod::BranchAndBound, o))
            } else {
                None
            };
            (i, solved.map(|(m, o)| (m, o, edge_map)))
        })
        .collect();

    let mut value = 0.0;
    let mut selected = Vec::new();
    let mut excluded = Vec::new();
    let mut methods = Vec::new();
    let mut solved_edges = 0usize;
    for (i, res) in results {
        match res {
            Some((method, opt, edge_map)) => {
                value += opt.value;
                selected.extend(opt.matching.edge_ids().iter().map(|&e| edge_map[e]));
                solved_edges += comps[i].edges.len();
                methods.push((i, method));
            }
            None => excluded.push(comps[i].clone()),
        }
    }
    let solved_fraction = if g.edge_count() == 0 {
        1.0
    } else {
        solved_edges as f64 / g.edge_count() as f64
    };
    ComponentSolve {
        value,
        matching: Matching::from_edge_ids(g, selected).expect("components are disjoint"),
        solved_fraction,
        excluded,
        methods,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_erdos_renyi, random_tree};
    use crate::laws::WeightLaw;

    #[test]
    fn single_edge_tree() {
        let g = WeightedGraph::path(&[0.7]);
        let o = forest_opt(&g).unwrap();
        assert_eq!(o.value, 0.7);
        assert_eq!(o.matching.edge_ids(), &[0]);
    }

    #[test]
    fn path_of_two_edges() {
        let g = WeightedGraph::path(&[1.0, 2.0]);
        let o = forest_opt(&g).unwrap();
        assert_eq!(o.value, 2.0);
        assert_eq!(o.matching.pairs(&g), vec![[1, 2]]);
        assert_eq!(brute_force_opt(&g, 24).unwrap().value, 2.0);
    }

    #[test]
    fn triangle_brute_force() {
        let g = WeightedGraph::new(3, [(0, 1, 3.0), (1, 2, 1.0), (0, 2, 2.0)]).unwrap();
        assert_eq!(brute_force_opt(&g, 24).unwrap().value, 3.0);
        assert_eq!(cycle_branch_opt(&g, 4).unwrap().value, 3.0);
    }

    #[test]
    fn empty_graph() {
        let g = WeightedGraph::empty(4);
        let o = brute_force_opt(&g, 24).unwrap();
        assert_eq!(o.value, 0.0);
        assert!(o.matching.is_empty());
    }

    #[test]
    fn brute_force_budget() {
        let g = gen_erdos_renyi(12, 11.0, &WeightLaw::uniform(0.0, 1.0).unwrap(), 3);
        assert!(matches!(brute_force_opt(&g, 24), Err(Error::Budget { .. })));
    }

    #[test]
    fn negative_edges_are_never_used() {
        let g = WeightedGraph::path(&[-1.0, -2.0]);
        assert_eq!(forest_opt(&g).unwrap().value, 0.0);
        assert_eq!(brute_force_opt(&g, 24).unwrap().value, 0.0);
    }

    #[test]
    fn forest_components_sum() {
        let w = WeightLaw::exponential(1.0).unwrap();
        let a = random_tree(7, &w, 1);
        let b = random_tree(5, &w, 2);
        let mut edges: Vec<_> = a.edges().iter().map(|e| (e.u, e.v, e.w)).collect();
        edges.extend(b.edges().iter().map(|e| (e.u + 7, e.v + 7, e.w)));
        let g = WeightedGraph::new(12, edges).unwrap();
        let solve = exact_opt_by_components(&g, ComponentLimits::default());
        let expected = forest_opt(&a).unwrap().value + forest_opt(&b).unwrap().value;
        assert!((solve.value - expected).abs() < 1e-12);
        assert_eq!(solve.solved_fraction, 1.0);
    }

    #[test]
    fn dense_component_is_excluded() {
        // a 50-vertex component of high cycle rank plus an isolated edge
        let w = WeightLaw::uniform(0.0, 1.0).unwrap();
        let dense = gen_erdos_renyi(50, 8.0, &w, 4);
        assert_eq!(dense.components().len(), 1);
        let mut edges: Vec<_> = dense.edges().iter().map(|e| (e.u, e.v, e.w)).collect();
        edges.push((50, 51, 0.5));
        let g = WeightedGraph::new(52, edges).unwrap();
        let solve = exact_opt_by_components(&g, ComponentLimits::default());
        assert_eq!(solve.excluded.len(), 1);
        assert_eq!(solve.excluded[0].vertices.len(), 50);
        assert_eq!(solve.value, 0.5);
        let expected = 1.0 / g.edge_count() as f64;
        assert!((solve.solved_fraction - expected).abs() < 1e-15);
    }

    #[test]
    fn cycle_branching_matches_brute_force() {
        let w = WeightLaw::exponential(1.0).unwrap();
        let mut checked = 0;
        for seed in 0..300 {
            let g = gen_erdos_renyi(10, 2.2, &w, seed);
            let rank: usize = g.components().iter().map(|c| c.cycle_rank()).sum();
            if rank > 8 || g.components().iter().any(|c| c.edges.len() > 24) {
                continue;
            }
            let a = cycle_branch_opt(&g, 8).unwrap();
            let b = brute_force_opt(&g, 24).unwrap();
            assert!((a.value - b.value).abs() < 1e-9, "seed {seed}");
            checked += 1;
        }
        assert!(checked > 100);
    }
}
