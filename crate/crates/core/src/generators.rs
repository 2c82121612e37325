//! Seeded random graph and tree generators.
//!
//! Every generator is a pure function of its parameters and seed.

use std::collections::{HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::graph::{Root, RootedTree, WeightedGraph};
use crate::laws::{DegreeLaw, WeightLaw};
use crate::rng::rng_from_seed;

/// Erdős–Rényi graph: each unordered pair is an edge independently with
/// probability `min(c/n, 1)`. Pairs are visited with geometric skips, so the
/// cost is linear in the number of edges.
pub fn gen_erdos_renyi(n: usize, c: f64, weights: &WeightLaw, seed: u64) -> WeightedGraph {
    let mut rng = rng_from_seed(seed);
    let mut g = WeightedGraph::empty(n);
    if n < 2 {
        return g;
    }
    let p = (c / n as f64).clamp(0.0, 1.0);
    if p == 0.0 {
        return g;
    }
    if p == 1.0 {
        for v in 1..n {
            for u in 0..v {
                let w = weights.sample(&mut rng);
                g.push_edge(u, v, w);
            }
        }
        return g;
    }
    let log_q = (-p).ln_1p();
    let (mut v, mut u) = (1usize, -1i64);
    while v < n {
        let r: f64 = rng.random();
        let skip = ((-r).ln_1p() / log_q).floor();
        u += 1 + if skip.is_finite() {
            skip.min(1e15) as i64
        } else {
            i64::MAX / 4
        };
        while u >= v as i64 && v < n {
            u -= v as i64;
            v += 1;
        }
        if v < n {
            let w = weights.sample(&mut rng);
            g.push_edge(u as usize, v, w);
        }
    }
    g
}

/// What the simple-graph projection of a configuration model removed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ProjectionReport {
    /// The last degree was incremented to make the degree sum even.
    pub parity_fixed: bool,
    pub half_edges: usize,
    pub self_loops_removed: usize,
    pub parallel_edges_removed: usize,
}

#[derive(Clone, Debug)]
pub struct ConfigModelGraph {
    pub graph: WeightedGraph,
    pub report: ProjectionReport,
}

/// Configuration model: uniform pairing of half-edges, then self loops and
/// repeated pairs are dropped. Weights are drawn for surviving edges only.
pub fn gen_config_model(degrees: &[usize], weights: &WeightLaw, seed: u64) -> ConfigModelGraph {
    let mut rng = rng_from_seed(seed);
    let mut degrees = degrees.to_vec();
    let mut report = ProjectionReport::default();
    if degrees.iter().sum::<usize>() % 2 == 1 {
        *degrees.last_mut().expect("odd sum implies nonempty") += 1;
        report.parity_fixed = true;
    }
    let mut stubs: Vec<usize> = degrees
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n(v, d))
        .collect();
    report.half_edges = stubs.len();
    stubs.shuffle(&mut rng);
    let mut g = WeightedGraph::empty(degrees.len());
    let mut seen = HashSet::new();
    for pair in stubs.chunks_exact(2) {
        let (u, v) = (pair[0], pair[1]);
        if u == v {
            report.self_loops_removed += 1;
        } else if !seen.insert((u.min(v), u.max(v))) {
            report.parallel_edges_removed += 1;
        } else {
            let w = weights.sample(&mut rng);
            g.push_edge(u, v, w);
        }
    }
    ConfigModelGraph { graph: g, report }
}

/// Configuration model with i.i.d. degrees drawn from `law`.
pub fn gen_config_model_iid(
    n: usize,
    law: &DegreeLaw,
    weights: &WeightLaw,
    seed: u64,
) -> ConfigModelGraph {
    let mut rng = rng_from_seed(seed ^ 0xD1B5_4A32_D192_ED03);
    let degrees: Vec<usize> = (0..n).map(|_| law.sample_degree(&mut rng)).collect();
    gen_config_model(&degrees, weights, seed)
}

/// Path on `n` vertices with i.i.d. weights.
pub fn gen_path(n: usize, weights: &WeightLaw, seed: u64) -> WeightedGraph {
    let mut rng = rng_from_seed(seed);
    let w: Vec<f64> = (0..n.saturating_sub(1))
        .map(|_| weights.sample(&mut rng))
        .collect();
    if n == 0 {
        return WeightedGraph::empty(0);
    }
    WeightedGraph::path(&w)
}

/// Uniform labelled tree on `n` vertices (Prüfer decoding) with i.i.d. weights.
pub fn random_tree(n: usize, weights: &WeightLaw, seed: u64) -> WeightedGraph {
    let mut rng = rng_from_seed(seed);
    let mut g = WeightedGraph::empty(n);
    if n < 2 {
        return g;
    }
    if n == 2 {
        let w = weights.sample(&mut rng);
        g.push_edge(0, 1, w);
        return g;
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    let mut degree = vec![1usize; n];
    for &x in &code {
        degree[x] += 1;
    }
    let mut leaves: std::collections::BTreeSet<usize> =
        (0..n).filter(|&v| degree[v] == 1).collect();
    for &x in &code {
        let leaf = leaves.pop_first().expect("a leaf always exists");
        let w = weights.sample(&mut rng);
        g.push_edge(leaf, x, w);
        degree[x] -= 1;
        if degree[x] == 1 {
            leaves.insert(x);
        }
    }
    let a = leaves.pop_first().expect("two leaves remain");
    let b = leaves.pop_first().expect("two leaves remain");
    let w = weights.sample(&mut rng);
    g.push_edge(a, b, w);
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rooting {
    Vertex,
    Edge,
}

/// Unimodular Galton–Watson tree truncated at depth `depth`.
///
/// Edge rooting joins two independent offspring-law trees by the root edge
/// `(0, 1)`; vertex rooting gives the root a π-distributed number of
/// children and every other vertex an offspring-law number. Vertices at the
/// truncation depth are marked as frontier.
pub fn sample_ubgw(
    depth: usize,
    law: &DegreeLaw,
    weights: &WeightLaw,
    rooting: Rooting,
    seed: u64,
) -> RootedTree {
    let mut rng = rng_from_seed(seed);
    let mut g = WeightedGraph::empty(0);
    let mut level = Vec::new();
    let mut queue = VecDeque::new();
    let root = match rooting {
        Rooting::Edge => {
            let a = g.push_vertex();
            let b = g.push_vertex();
            let w = weights.sample(&mut rng);
            g.push_edge(a, b, w);
            level.extend([0, 0]);
            queue.extend([(a, false), (b, false)]);
            Root::Edge(a, b)
        }
        Rooting::Vertex => {
            let a = g.push_vertex();
            level.push(0);
            queue.push_back((a, true));
            Root::Vertex(a)
        }
    };
    while let Some((v, is_vertex_root)) = queue.pop_front() {
        if level[v] >= depth {
            continue;
        }
        let children = if is_vertex_root {
            law.sample_degree(&mut rng)
        } else {
            law.sample_offspring(&mut rng)
        };
        for _ in 0..children {
            let c = g.push_vertex();
            level.push(level[v] + 1);
            let w = weights.sample(&mut rng);
            g.push_edge(v, c, w);
            queue.push_back((c, false));
        }
    }
    let frontier = level.iter().map(|&d| d == depth).collect();
    RootedTree::with_frontier(g, root, frontier).expect("generated tree is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp1() -> WeightLaw {
        WeightLaw::exponential(1.0).unwrap()
    }

    #[test]
    fn complete_when_probability_clips() {
        let g = gen_erdos_renyi(3, 3.0, &exp1(), 1);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn erdos_renyi_edge_count_is_binomial() {
        let n = 10_000usize;
        let c = 0.8;
        let g = gen_erdos_renyi(n, c, &exp1(), 42);
        let pairs = (n * (n - 1) / 2) as f64;
        let p = c / n as f64;
        let mean = pairs * p;
        let sd = (pairs * p * (1.0 - p)).sqrt();
        assert!((g.edge_count() as f64 - mean).abs() < 5.0 * sd);
        assert!(WeightedGraph::new(n, g.edges().iter().map(|e| (e.u, e.v, e.w))).is_ok());
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(
            gen_erdos_renyi(500, 2.0, &exp1(), 9),
            gen_erdos_renyi(500, 2.0, &exp1(), 9)
        );
        assert_ne!(
            gen_erdos_renyi(500, 2.0, &exp1(), 9),
            gen_erdos_renyi(500, 2.0, &exp1(), 10)
        );
    }

    #[test]
    fn config_model_single_pairing() {
        let cm = gen_config_model(&[1, 1], &exp1(), 3);
        assert_eq!(cm.graph.edge_count(), 1);
        assert_eq!(cm.graph.find_edge(0, 1), Some(0));
    }

    #[test]
    fn config_model_parity_fix_and_self_loops() {
        let cm = gen_config_model(&[3], &exp1(), 3);
        assert!(cm.report.parity_fixed);
        assert_eq!(cm.report.half_edges, 4);
        assert_eq!(cm.report.self_loops_removed, 2);
        assert_eq!(cm.graph.edge_count(), 0);
    }

    #[test]
    fn config_model_two_regular_degree_audit() {
        let cm = gen_config_model(&[2; 100], &exp1(), 11);
        assert!((0..100).all(|v| cm.graph.degree(v) <= 2));
        let r = &cm.report;
        assert_eq!(
            2 * (cm.graph.edge_count() + r.self_loops_removed + r.parallel_edges_removed),
            r.half_edges
        );
    }

    #[test]
    fn ubgw_edge_rooted_depth_zero() {
        let law = DegreeLaw::poisson(2.0).unwrap();
        let t = sample_ubgw(0, &law, &exp1(), Rooting::Edge, 5);
        assert_eq!(t.graph().n(), 2);
        assert_eq!(t.graph().edge_count(), 1);
        assert_eq!(t.frontier(), &[true, true]);
    }

    #[test]
    fn ubgw_two_regular_is_a_path() {
        let law = DegreeLaw::dirac(2).unwrap();
        for h in 0..6 {
            let t = sample_ubgw(h, &law, &exp1(), Rooting::Edge, h as u64);
            let g = t.graph();
            assert_eq!(g.n(), 2 * h + 2);
            assert!((0..g.n()).all(|v| g.degree(v) <= 2));
        }
    }

    #[test]
    fn random_tree_is_a_tree() {
        for n in 1..15 {
            let g = random_tree(n, &exp1(), n as u64);
            assert_eq!(g.edge_count(), n.saturating_sub(1));
            assert_eq!(g.components().len(), 1);
        }
    }
}
