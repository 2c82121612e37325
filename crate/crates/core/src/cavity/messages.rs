//! Cavity messages `Z(u,v)`, the decision rule and self-loop augmentation.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{Matching, RootedTree, WeightedGraph};

/// `Z(u,v)` for every directed edge, indexed like
/// [`WeightedGraph::directed_index`], plus optional self-loop values
/// `Z^s(v,v)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MessageField {
    z: Vec<f64>,
    self_loop: Option<Vec<f64>>,
}

impl MessageField {
    pub fn zeros(g: &WeightedGraph) -> Self {
        Self {
            z: vec![0.0; 2 * g.edge_count()],
            self_loop: None,
        }
    }

    pub fn from_directed(z: Vec<f64>) -> Self {
        Self { z, self_loop: None }
    }

    pub fn directed(&self) -> &[f64] {
        &self.z
    }

    pub fn at(&self, d: usize) -> f64 {
        self.z[d]
    }

    /// `Z(u, v)`; `None` when `{u, v}` is not an edge.
    pub fn get(&self, g: &WeightedGraph, u: usize, v: usize) -> Option<f64> {
        g.find_edge(u, v).map(|e| self.z[g.directed_index(e, u)])
    }

    pub fn self_loops(&self) -> Option<&[f64]> {
        self.self_loop.as_deref()
    }

    /// JSON object keyed `"u->v"`, self loops keyed `"v->v"`. Infinite
    /// self-loop values (isolated vertices) serialize as `null`.
    pub fn to_json(&self, g: &WeightedGraph) -> Value {
        let mut map = Map::new();
        for (d, &z) in self.z.iter().enumerate() {
            let (u, v) = g.directed_endpoints(d);
            map.insert(format!("{u}->{v}"), number(z));
        }
        if let Some(loops) = &self.self_loop {
            for (v, &z) in loops.iter().enumerate() {
                map.insert(format!("{v}->{v}"), number(z));
            }
        }
        Value::Object(map)
    }
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Best and second-best of `w(v,u') - Z(v,u')` over the neighbours of `v`,
/// with the edge id attaining the best.
#[derive(Clone, Copy, Debug)]
struct TopTwo {
    best: f64,
    best_edge: usize,
    second: f64,
}

impl TopTwo {
    const EMPTY: TopTwo = TopTwo {
        best: f64::NEG_INFINITY,
        best_edge: usize::MAX,
        second: f64::NEG_INFINITY,
    };

    fn push(&mut self, value: f64, edge: usize) {
        if value > self.best {
            self.second = self.best;
            self.best = value;
            self.best_edge = edge;
        } else if value > self.second {
            self.second = value;
        }
    }

    fn excluding(&self, edge: usize) -> f64 {
        if self.best_edge == edge {
            self.second
        } else {
            self.best
        }
    }
}

fn vertex_stats(g: &WeightedGraph, z: &[f64], v: usize) -> TopTwo {
    let mut t = TopTwo::EMPTY;
    for &(_, e) in g.neighbors(v) {
        t.push(g.edge(e).w - z[g.directed_index(e, v)], e);
    }
    t
}

/// One synchronous application of the recursion to every directed edge.
pub(crate) fn recursion_update(g: &WeightedGraph, z: &[f64], out: &mut [f64]) {
    for v in 0..g.n() {
        let stats = vertex_stats(g, z, v);
        for &(u, e) in g.neighbors(v) {
            out[g.directed_index(e, u)] = stats.excluding(e).max(0.0);
        }
    }
}

/// Largest violation of the message recursion over all directed edges.
pub fn recursion_residual(g: &WeightedGraph, f: &MessageField) -> f64 {
    let mut next = vec![0.0; f.z.len()];
    recursion_update(g, &f.z, &mut next);
    next.iter()
        .zip(&f.z)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Exact messages on a forest in O(n): a leaf-to-root pass for messages
/// pointing away from the BFS roots, then a root-to-leaf pass using
/// per-vertex top-two statistics for the reverse orientation.
pub fn solve_messages_forest(g: &WeightedGraph) -> Result<MessageField> {
    let n = g.n();
    let mut parent_edge = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for s in 0..n {
        if visited[s] {
            continue;
        }
        visited[s] = true;
        let start = order.len();
        order.push(s);
        let mut head = start;
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

    let mut z = vec![0.0; 2 * g.edge_count()];
    // Z(parent -> v) from v's children.
    for &v in order.iter().rev() {
        let pe = parent_edge[v];
        if pe == usize::MAX {
            continue;
        }
        let best = g
            .neighbors(v)
            .iter()
            .filter(|&&(_, e)| e != pe)
            .map(|&(_, e)| g.edge(e).w - z[g.directed_index(e, v)])
            .fold(0.0, f64::max);
        let p = g.edge(pe).other(v);
        z[g.directed_index(pe, p)] = best;
    }
    // Z(child -> p) from everything around p except the child.
    for &p in &order {
        let stats = vertex_stats(g, &z, p);
        for &(c, e) in g.neighbors(p) {
            if e == parent_edge[p] {
                continue;
            }
            z[g.directed_index(e, c)] = stats.excluding(e).max(0.0);
        }
    }
    Ok(MessageField::from_directed(z))
}

pub fn solve_messages_tree(t: &RootedTree) -> MessageField {
    solve_messages_forest(t.graph()).expect("rooted trees are acyclic")
}

/// Output of the decision rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub matching: Matching,
    /// Vertices where the vertex form of the rule disagrees with the edge
    /// form (only possible for ties or non-fixed-point fields).
    pub vertex_rule_violations: Vec<usize>,
}

/// Edge `{u,v}` is selected iff `Z(u,v) + Z(v,u) < w(u,v)` (strict, no
/// epsilon).
pub fn decide_matching(g: &WeightedGraph, f: &MessageField) -> Result<Decision> {
    if f.z.len() != 2 * g.edge_count() {
        return Err(Error::validation(
            "messages",
            "field does not cover every directed edge",
        ));
    }
    let mut selected = Vec::new();
    let mut covered = vec![false; g.n()];
    for (e, edge) in g.edges().iter().enumerate() {
        if f.z[2 * e] + f.z[2 * e + 1] < edge.w {
            for x in [edge.u, edge.v] {
                if std::mem::replace(&mut covered[x], true) {
                    return Err(Error::InconsistentMessages { vertex: x });
                }
            }
            selected.push(e);
        }
    }
    let matching = Matching::from_edge_ids(g, selected)?;

    // Vertex rule: u is matched to the unique argmax of w(u,v') - Z(u,v')
    // when that maximum is positive, and unmatched otherwise.
    let mut violations = Vec::new();
    for u in 0..g.n() {
        let mut best = f64::NEG_INFINITY;
        let mut arg = None;
        let mut tied = false;
        for &(v, e) in g.neighbors(u) {
            let val = g.edge(e).w - f.z[g.directed_index(e, u)];
            if val > best {
                best = val;
                arg = Some(v);
                tied = false;
            } else if val == best {
                tied = true;
            }
        }
        let predicted = if best > 0.0 && !tied { arg } else { None };
        if predicted != matching.partner(u) {
            violations.push(u);
        }
    }
    Ok(Decision {
        matching,
        vertex_rule_violations: violations,
    })
}

/// Tree with a self loop of weight `w^s(v,v) = Z^s(v,v)` at every vertex.
#[derive(Clone, Debug)]
pub struct SelfLoopedTree {
    pub base: RootedTree,
    pub self_loop_weight: Vec<f64>,
}

impl SelfLoopedTree {
    /// Vertices whose loop is selected, i.e. `w^s(v,v) < 0`.
    pub fn selected_loops(&self) -> Vec<usize> {
        (0..self.self_loop_weight.len())
            .filter(|&v| self.self_loop_weight[v] < 0.0)
            .collect()
    }
}

/// Adds self loops with `Z^s(v,v) = max_{u' ~ v} (w(v,u') - Z(v,u'))`.
///
/// With these loops, the extended messages satisfy the recursion without the
/// clamp at zero, and a vertex carries a selected (negative) loop exactly
/// when the decision rule leaves it unmatched. Isolated vertices get `-inf`.
pub fn augment_self_loops(t: &RootedTree, f: &MessageField) -> (SelfLoopedTree, MessageField) {
    let g = t.graph();
    let loops: Vec<f64> = (0..g.n()).map(|v| vertex_stats(g, &f.z, v).best).collect();
    let tree = SelfLoopedTree {
        base: t.clone(),
        self_loop_weight: loops.clone(),
    };
    let field = MessageField {
        z: f.z.clone(),
        self_loop: Some(loops),
    };
    (tree, field)
}

/// Largest violation of the loop-augmented recursion
/// `Z^s(u,v) = max_{u' ~ v, u' != u} (w^s(v,u') - Z^s(v,u'))`, where `u'`
/// ranges over real neighbours and the loop at `v`.
pub fn augmented_residual(g: &WeightedGraph, f: &MessageField) -> f64 {
    let Some(loops) = &f.self_loop else {
        return f64::INFINITY;
    };
    let mut worst = 0.0_f64;
    for v in 0..g.n() {
        let stats = vertex_stats(g, &f.z, v);
        // the loop contributes w^s(v,v) - Z^s(v,v) = 0
        for &(u, e) in g.neighbors(v) {
            let expected = stats.excluding(e).max(0.0);
            worst = worst.max((f.z[g.directed_index(e, u)] - expected).abs());
        }
        let diff = if stats.best.is_infinite() && loops[v].is_infinite() {
            0.0
        } else {
            (loops[v] - stats.best).abs()
        };
        worst = worst.max(diff);
    }
    worst
}

/// Damped synchronous message passing on an arbitrary graph.
#[derive(Clone, Copy, Debug)]
pub struct BpOptions {
    pub max_sweeps: usize,
    /// Weight `γ` kept from the previous sweep, in `[0, 1)`.
    pub damping: f64,
    pub tol: f64,
}

impl Default for BpOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 10_000,
            damping: 0.0,
            tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BpOutcome {
    pub field: MessageField,
    pub converged: bool,
    /// Largest change in the final sweep.
    pub residual: f64,
    pub sweeps: usize,
}

/// Iterates `z <- (1-γ) update(z) + γ z` until the largest change drops
/// below `tol`. Non-convergence is reported in the outcome, never hidden.
pub fn bp_iterate(
    g: &WeightedGraph,
    init: Option<&MessageField>,
    opts: BpOptions,
) -> Result<BpOutcome> {
    if !(0.0..1.0).contains(&opts.damping) {
        return Err(Error::validation("damping", "must lie in [0, 1)"));
    }
    let mut z = match init {
        Some(f) if f.z.len() == 2 * g.edge_count() => f.z.clone(),
        Some(_) => return Err(Error::validation("init", "field size does not match graph")),
        None => vec![0.0; 2 * g.edge_count()],
    };
    let mut next = vec![0.0; z.len()];
    let mut residual = if z.is_empty() { 0.0 } else { f64::INFINITY };
    let mut sweeps = 0;
    while sweeps < opts.max_sweeps && !z.is_empty() {
        recursion_update(g, &z, &mut next);
        sweeps += 1;
        residual = 0.0;
        for (cur, new) in z.iter_mut().zip(&next) {
            let updated = (1.0 - opts.damping) * new + opts.damping * *cur;
            residual = f64::max(residual, (updated - *cur).abs());
            *cur = updated;
        }
        if residual < opts.tol {
            break;
        }
    }
    Ok(BpOutcome {
        field: MessageField::from_directed(z),
        converged: residual < opts.tol,
        residual,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Root;

    fn z(g: &WeightedGraph, f: &MessageField, u: usize, v: usize) -> f64 {
        f.get(g, u, v).unwrap()
    }

    #[test]
    fn single_edge_messages_vanish() {
        let g = WeightedGraph::path(&[1.3]);
        let f = solve_messages_forest(&g).unwrap();
        assert_eq!(z(&g, &f, 0, 1), 0.0);
        assert_eq!(z(&g, &f, 1, 0), 0.0);
    }

    #[test]
    fn path_messages_by_hand() {
        // a=0, b=1, c=2 with w(a,b)=1, w(b,c)=2
        let g = WeightedGraph::path(&[1.0, 2.0]);
        let f = solve_messages_forest(&g).unwrap();
        assert_eq!(z(&g, &f, 1, 2), 0.0);
        assert_eq!(z(&g, &f, 0, 1), 2.0);
        assert_eq!(z(&g, &f, 1, 0), 0.0);
        assert_eq!(z(&g, &f, 2, 1), 1.0);
        let d = decide_matching(&g, &f).unwrap();
        assert_eq!(d.matching.pairs(&g), vec![[1, 2]]);
        assert!(d.vertex_rule_violations.is_empty());
    }

    #[test]
    fn star_messages_by_hand() {
        let g = WeightedGraph::new(4, [(0, 1, 1.0), (0, 2, 5.0), (0, 3, 3.0)]).unwrap();
        let f = solve_messages_forest(&g).unwrap();
        for leaf in 1..4 {
            assert_eq!(z(&g, &f, 0, leaf), 0.0);
        }
        assert_eq!(z(&g, &f, 1, 0), 5.0);
        assert_eq!(z(&g, &f, 2, 0), 3.0);
        assert_eq!(recursion_residual(&g, &f), 0.0);
    }

    #[test]
    fn negative_weights_give_empty_matching() {
        let g = WeightedGraph::path(&[-1.0, -0.5, -2.0]);
        let f = solve_messages_forest(&g).unwrap();
        assert!(f.directed().iter().all(|&x| x == 0.0));
        assert!(decide_matching(&g, &f).unwrap().matching.is_empty());
    }

    #[test]
    fn cycle_is_rejected() {
        let g = WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap();
        assert!(matches!(
            solve_messages_forest(&g),
            Err(Error::CycleDetected)
        ));
    }

    #[test]
    fn inconsistent_field_is_reported() {
        let g = WeightedGraph::path(&[1.0, 1.0]);
        let f = MessageField::zeros(&g);
        assert!(matches!(
            decide_matching(&g, &f),
            Err(Error::InconsistentMessages { vertex: 1 })
        ));
    }

    #[test]
    fn self_loop_on_single_edge() {
        let t = RootedTree::new(WeightedGraph::path(&[1.0]), Root::Edge(0, 1)).unwrap();
        let f = solve_messages_tree(&t);
        let (looped, ext) = augment_self_loops(&t, &f);
        assert_eq!(looped.self_loop_weight, vec![1.0, 1.0]);
        assert!(looped.selected_loops().is_empty());
        assert_eq!(augmented_residual(t.graph(), &ext), 0.0);
    }

    #[test]
    fn negative_star_selects_loops() {
        let g = WeightedGraph::new(3, [(0, 1, -1.0), (0, 2, -2.0)]).unwrap();
        let t = RootedTree::new(g, Root::Vertex(0)).unwrap();
        let f = solve_messages_tree(&t);
        let (looped, _) = augment_self_loops(&t, &f);
        assert_eq!(looped.selected_loops(), vec![0, 1, 2]);
    }

    #[test]
    fn message_json_keys() {
        let g = WeightedGraph::path(&[1.0, 2.0]);
        let t = RootedTree::new(g.clone(), Root::Vertex(0)).unwrap();
        let f = solve_messages_tree(&t);
        let (_, ext) = augment_self_loops(&t, &f);
        let json = ext.to_json(&g);
        assert_eq!(json["0->1"], 2.0);
        assert_eq!(json["2->1"], 1.0);
        assert_eq!(json["1->1"], 2.0);
    }

    #[test]
    fn fixed_point_is_preserved_by_one_sweep() {
        let g = WeightedGraph::path(&[0.4, 1.1, 0.3, 0.9]);
        let f = solve_messages_forest(&g).unwrap();
        let out = bp_iterate(
            &g,
            Some(&f),
            BpOptions {
                max_sweeps: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.residual, 0.0);
        assert!(out.converged);
    }

    #[test]
    fn damping_must_be_below_one() {
        let g = WeightedGraph::path(&[1.0]);
        let opts = BpOptions {
            damping: 1.0,
            ..Default::default()
        };
        assert!(bp_iterate(&g, None, opts).is_err());
    }
}
