//! Rounding of local message estimates into a matching of a finite graph:
//! per-edge scores on universal covers, projection onto symmetric
//! bistochastic matrices, Birkhoff–von Neumann decomposition and
//! extraction of a matching from a sampled permutation.

use std::collections::VecDeque;

use rand::Rng as _;
use rayon::prelude::*;
use serde::Serialize;

use crate::cavity::{exact_opt_by_components, ComponentLimits};
use crate::cover::universal_cover;
use crate::error::{Error, Result};
use crate::graph::{matching_stats, Matching, Root, RootedTree, WeightedGraph};
use crate::laws::WeightLaw;
use crate::rde::MessageLaw;
use crate::rng::{derive_seed, rng_from_seed};

/// Largest dimension materialised as a dense matrix.
pub const MAX_DENSE: usize = 16_384;

/// Above this dimension score matrices are written as sparse triplets.
pub const SPARSE_CSV_ABOVE: usize = 5000;

/// Square row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Result<Self> {
        if n > MAX_DENSE {
            return Err(Error::Budget {
                what: format!("dense {n} x {n} matrix"),
                limit: MAX_DENSE,
            });
        }
        Ok(Self {
            n,
            data: vec![0.0; n * n],
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n)?;
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::validation("matrix", "rows must all have length n"));
        }
        let mut m = Self::zeros(n)?;
        for (i, r) in rows.iter().enumerate() {
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] = x;
    }

    fn add(&mut self, i: usize, j: usize, x: f64) {
        self.data[i * self.n + j] += x;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.n];
        for i in 0..self.n {
            for (cj, x) in c.iter_mut().zip(self.row(i)) {
                *cj += x;
            }
        }
        c
    }

    pub fn transpose(&self) -> Self {
        let mut t = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Entrywise L1 distance.
    pub fn l1_distance(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Largest `|row sum - 1|` or `|column sum - 1|`.
    pub fn bistochastic_defect(&self) -> f64 {
        self.row_sums()
            .into_iter()
            .chain(self.col_sums())
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ |row sum - 1| + Σ |column sum - 1|`.
    pub fn marginal_deviation(&self) -> f64 {
        self.row_sums()
            .into_iter()
            .chain(self.col_sums())
            .map(|s| (s - 1.0).abs())
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n * self.n * 4);
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(f64::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Monte-Carlo estimate of `P(Z(a,b) + Z(b,a) < w(a,b) <= x)` on an
/// edge-rooted tree whose frontier vertices receive i.i.d. messages from
/// `zeta`; interior messages follow the recursion inward.
pub fn score_edge(
    cover: &RootedTree,
    zeta: &impl MessageLaw,
    x: f64,
    replicates: usize,
    seed: u64,
) -> Result<f64> {
    let Root::Edge(a, b) = cover.root() else {
        return Err(Error::validation(
            "cover",
            "score_edge needs an edge-rooted tree",
        ));
    };
    let t = cover.graph();
    let w0 = t.edge(cover.root_edge().expect("edge root")).w;
    if !(w0 <= x) || w0 <= 0.0 {
        return Ok(0.0);
    }
    let frontier = cover.frontier();

    // BFS away from the root edge; children stored contiguously per vertex
    let n = t.n();
    let mut parent = vec![usize::MAX; n];
    parent[a] = b;
    parent[b] = a;
    let mut order = vec![a, b];
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &(u, _) in t.neighbors(v) {
            if u != parent[v] {
                parent[u] = v;
                order.push(u);
            }
        }
    }
    let mut child_start = vec![0usize; n + 1];
    let mut kids: Vec<(usize, f64)> = Vec::with_capacity(n);
    let mut slot = vec![0usize; n];
    for (pos, &v) in order.iter().enumerate() {
        slot[v] = pos;
    }
    for (pos, &v) in order.iter().enumerate() {
        child_start[pos] = kids.len();
        for &(u, e) in t.neighbors(v) {
            if u != parent[v] {
                kids.push((slot[u], t.edge(e).w));
            }
        }
    }
    child_start[n] = kids.len();
    let is_frontier: Vec<bool> = order.iter().map(|&v| frontier[v]).collect();
    let random = is_frontier.iter().any(|&f| f);

    let mut msg = vec![0.0_f64; n];
    let mut rng = rng_from_seed(seed);
    let mut hits = 0usize;
    let runs = if random { replicates } else { 1 };
    if runs == 0 {
        return Ok(0.0);
    }
    for _ in 0..runs {
        for pos in (0..n).rev() {
            msg[pos] = if is_frontier[pos] {
                zeta.sample(&mut rng)
            } else {
                kids[child_start[pos]..child_start[pos + 1]]
                    .iter()
                    .fold(0.0_f64, |m, &(c, w)| m.max(w - msg[c]))
            };
        }
        // positions 0 and 1 hold Z(b, a) and Z(a, b)
        hits += usize::from(msg[0] + msg[1] < w0);
    }
    Ok(hits as f64 / runs as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScoreMeta {
    pub depth: usize,
    pub cutoff: f64,
    pub replicates: usize,
    pub seed: u64,
}

/// An edge whose cover exceeded the vertex budget and was scored at a
/// smaller depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DepthReduction {
    pub edge: usize,
    pub u: usize,
    pub v: usize,
    pub depth: usize,
}

/// Symmetric score matrix: one score per edge, zero off the edge set, and
/// the diagonal completing each row to 1 (possibly negative).
#[derive(Clone, Debug, Serialize)]
pub struct ScoreMatrix {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub edge_scores: Vec<f64>,
    pub diagonal: Vec<f64>,
    pub meta: ScoreMeta,
    pub depth_reductions: Vec<DepthReduction>,
}

impl ScoreMatrix {
    pub fn to_dense(&self) -> Result<DenseMatrix> {
        let mut m = DenseMatrix::zeros(self.n)?;
        for (&(u, v), &q) in self.edges.iter().zip(&self.edge_scores) {
            m.set(u, v, q);
            m.set(v, u, q);
        }
        for (i, &d) in self.diagonal.iter().enumerate() {
            m.set(i, i, d);
        }
        Ok(m)
    }

    /// `Σ_j max(0, -q_jj) / n`.
    pub fn mean_negative_diagonal(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.diagonal.iter().map(|d| (-d).max(0.0)).sum::<f64>() / self.n as f64
    }

    pub fn negative_diagonal_count(&self) -> usize {
        self.diagonal.iter().filter(|&&d| d < 0.0).count()
    }

    /// Dense CSV up to [`SPARSE_CSV_ABOVE`], `i,j,q` triplets of the nonzero
    /// entries beyond.
    pub fn to_csv(&self) -> Result<String> {
        if self.n <= SPARSE_CSV_ABOVE {
            return Ok(self.to_dense()?.to_csv());
        }
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for (&(u, v), &q) in self.edges.iter().zip(&self.edge_scores) {
            if q != 0.0 {
                triplets.push((u, v, q));
                triplets.push((v, u, q));
            }
        }
        triplets.extend(
            self.diagonal
                .iter()
                .enumerate()
                .filter(|(_, &d)| d != 0.0)
                .map(|(i, &d)| (i, i, d)),
        );
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out = String::from("i,j,q\n");
        for (i, j, q) in triplets {
            out.push_str(&format!("{i},{j},{q}\n"));
        }
        Ok(out)
    }
}

/// Scores every edge from its depth-`depth` universal cover. A cover over
/// `cover_budget` vertices is retried at smaller depths and the reduction is
/// recorded; edge `e` uses the seed stream `e`.
pub fn build_score_matrix(
    g: &WeightedGraph,
    depth: usize,
    cutoff: f64,
    replicates: usize,
    seed: u64,
    cover_budget: usize,
    zeta: &impl MessageLaw,
) -> Result<ScoreMatrix> {
    let scored: Vec<(f64, Option<DepthReduction>)> = (0..g.edge_count())
        .into_par_iter()
        .map(|e| {
            let edge = g.edge(e);
            let mut d = depth;
            loop {
                match universal_cover(g, (edge.u, edge.v), d, cover_budget) {
                    Ok(Some(cover)) => {
                        let q = score_edge(
                            &cover.tree,
                            zeta,
                            cutoff,
                            replicates,
                            derive_seed(seed, e as u64),
                        )?;
                        let reduced = (d < depth).then_some(DepthReduction {
                            edge: e,
                            u: edge.u,
                            v: edge.v,
                            depth: d,
                        });
                        return Ok((q, reduced));
                    }
                    Ok(None) => unreachable!("edge {e} is in the graph"),
                    Err(Error::Budget { what, limit }) if d == 0 => {
                        return Err(Error::Budget {
                            what: format!("edge {e} ({}, {}): {what}", edge.u, edge.v),
                            limit,
                        })
                    }
                    Err(Error::Budget { .. }) => d -= 1,
                    Err(err) => return Err(err),
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut diagonal = vec![1.0; g.n()];
    for (edge, (q, _)) in g.edges().iter().zip(&scored) {
        diagonal[edge.u] -= q;
        diagonal[edge.v] -= q;
    }
    Ok(ScoreMatrix {
        n: g.n(),
        edges: g.edges().iter().map(|e| (e.u, e.v)).collect(),
        edge_scores: scored.iter().map(|s| s.0).collect(),
        diagonal,
        meta: ScoreMeta {
            depth,
            cutoff,
            replicates,
            seed,
        },
        depth_reductions: scored.iter().filter_map(|s| s.1).collect(),
    })
}

/// `(1/n) Σ_{i≠j} q_ij w_ij`.
pub fn rounded_performance(q: &ScoreMatrix, g: &WeightedGraph) -> Result<f64> {
    if q.n != g.n() || q.edges.len() != g.edge_count() {
        return Err(Error::validation(
            "score_matrix",
            "dimensions do not match the graph",
        ));
    }
    if g.n() == 0 {
        return Ok(0.0);
    }
    let s: f64 = g
        .edges()
        .iter()
        .zip(&q.edge_scores)
        .map(|(e, q)| q * e.w)
        .sum();
    Ok(2.0 * s / g.n() as f64)
}

/// Empirical `p`-quantile of the edge weights (0 for an edgeless graph).
pub fn weight_percentile(g: &WeightedGraph, p: f64) -> f64 {
    let w: Vec<f64> = g.edges().iter().map(|e| e.w).collect();
    match WeightLaw::empirical(w) {
        Ok(law) => law.quantile(p),
        Err(_) => 0.0,
    }
}

/// Moves `surplus` out of heavy lines into light ones. `entry(line, k)`
/// addresses the `k`-th entry of a line; mass only moves between lines at the
/// same position `k`, largest entries first.
fn balance_lines(m: &mut DenseMatrix, sums: &[f64], target: f64, line_major: bool) {
    let n = m.n;
    let idx = move |line: usize, k: usize| if line_major { (line, k) } else { (k, line) };
    let mut light: Vec<(usize, f64)> = (0..n)
        .filter(|&i| sums[i] < target)
        .map(|i| (i, target - sums[i]))
        .collect();
    let mut li = 0;
    for i in 0..n {
        let mut surplus = sums[i] - target;
        if surplus <= 0.0 {
            continue;
        }
        let mut ks: Vec<usize> = (0..n).collect();
        ks.sort_by(|&p, &q| {
            let (a, b) = (idx(i, p), idx(i, q));
            m.get(b.0, b.1).total_cmp(&m.get(a.0, a.1)).then(p.cmp(&q))
        });
        for k in ks {
            let (r, c) = idx(i, k);
            while surplus > 0.0 && m.get(r, c) > 0.0 && li < light.len() {
                let (dest, deficit) = light[li];
                let amount = surplus.min(deficit).min(m.get(r, c));
                m.add(r, c, -amount);
                let (dr, dc) = idx(dest, k);
                m.add(dr, dc, amount);
                surplus -= amount;
                light[li].1 -= amount;
                if light[li].1 <= 0.0 || amount == deficit {
                    li += 1;
                }
            }
            if surplus <= 0.0 || li == light.len() {
                break;
            }
        }
    }
}

/// Greedy load balancing onto the Birkhoff polytope: mass moves within
/// columns until every row sums to the average `L`, then within rows until
/// every column does, and the result is divided by `L`. Returns the matrix
/// and `‖S - M‖₁`.
pub fn load_balance(m: &DenseMatrix) -> Result<(DenseMatrix, f64)> {
    let n = m.n;
    if m.data.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::validation(
            "matrix",
            "entries must be finite and nonnegative",
        ));
    }
    let rows = m.row_sums();
    let cols = m.col_sums();
    if let Some(i) = rows.iter().position(|&s| s <= 0.0) {
        return Err(Error::Degenerate(format!("row {i} has zero sum")));
    }
    if let Some(j) = cols.iter().position(|&s| s <= 0.0) {
        return Err(Error::Degenerate(format!("column {j} has zero sum")));
    }
    if n == 0 {
        return Ok((m.clone(), 0.0));
    }
    let target = rows.iter().sum::<f64>() / n as f64;
    let mut s = m.clone();
    balance_lines(&mut s, &rows, target, true);
    let cols = s.col_sums();
    balance_lines(&mut s, &cols, target, false);
    for x in &mut s.data {
        *x = (*x / target).max(0.0);
    }
    let moved = s.l1_distance(m);
    Ok((s, moved))
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    /// Total negative diagonal mass set to zero before balancing.
    pub clipped_mass: f64,
    pub clipped_entries: usize,
    /// `‖load_balance(M) - M‖₁`.
    pub balance_l1: f64,
    /// `‖M - Mᵀ‖₁ / 2`, the distance from `M` to its symmetric part.
    pub symmetry_l1: f64,
    /// `‖output - M‖₁`.
    pub total_l1: f64,
}

/// Clips negative diagonal entries, load-balances, then averages with the
/// transpose.
pub fn project_sym_birkhoff(m: &DenseMatrix) -> Result<(DenseMatrix, ProjectionReport)> {
    let n = m.n;
    let mut clipped = m.clone();
    let (mut clipped_mass, mut clipped_entries) = (0.0, 0);
    for i in 0..n {
        let d = clipped.get(i, i);
        if d < 0.0 {
            clipped_mass -= d;
            clipped_entries += 1;
            clipped.set(i, i, 0.0);
        }
    }
    let (balanced, balance_l1) = load_balance(&clipped)?;
    let mut out = balanced.clone();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (balanced.get(i, j) + balanced.get(j, i));
            out.set(i, j, avg);
            out.set(j, i, avg);
        }
    }
    let symmetry_l1 = 0.5 * clipped.l1_distance(&clipped.transpose());
    let total_l1 = out.l1_distance(&clipped);
    Ok((
        out,
        ProjectionReport {
            clipped_mass,
            clipped_entries,
            balance_l1,
            symmetry_l1,
            total_l1,
        },
    ))
}

/// `Σ λ_k P_k` with `P_k` given as `perm[i] = j` for `P[i][j] = 1`.
#[derive(Clone, Debug, Serialize)]
pub struct BvnDecomposition {
    pub terms: Vec<(f64, Vec<usize>)>,
    pub residual_l1: f64,
}

impl BvnDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.0).sum()
    }

    pub fn reconstruct(&self, n: usize) -> Result<DenseMatrix> {
        let mut m = DenseMatrix::zeros(n)?;
        for (lambda, perm) in &self.terms {
            for (i, &j) in perm.iter().enumerate() {
                m.add(i, j, *lambda);
            }
        }
        Ok(m)
    }
}

/// Tolerance on row and column sums accepted by [`birkhoff_decompose`].
pub const BISTOCHASTIC_TOL: f64 = 1e-6;

/// Greedy Birkhoff–von Neumann decomposition. Each term is a perfect
/// matching of the support `{s_ij > tol/n}` found by augmenting paths (kept
/// from the previous term where still valid), weighted by its smallest
/// entry. Rows with no augmenting path in that support fall back to the
/// strictly positive entries.
pub fn birkhoff_decompose(s: &DenseMatrix, tol: f64, max_terms: usize) -> Result<BvnDecomposition> {
    let n = s.n;
    if s.data.iter().any(|x| !(*x >= 0.0)) {
        return Err(Error::validation("matrix", "entries must be nonnegative"));
    }
    if s.bistochastic_defect() > BISTOCHASTIC_TOL {
        return Err(Error::validation("matrix", "not bistochastic within 1e-6"));
    }
    let mut r = s.clone();
    let thresh = if n == 0 { 0.0 } else { tol / n as f64 };
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| r.get(i, j) > 0.0).collect())
        .collect();
    let mut row_match: Vec<Option<usize>> = vec![None; n];
    let mut col_match: Vec<Option<usize>> = vec![None; n];
    let mut residual: f64 = r.data.iter().sum();
    let mut terms = Vec::new();
    while residual >= tol && terms.len() < max_terms {
        for i in 0..n {
            // near the end the leftover mass per row is about tol/n, so the
            // thresholded support can lose its perfect matching
            if row_match[i].is_none()
                && !augment(i, &r, thresh, &adj, &mut row_match, &mut col_match)
                && !augment(i, &r, 0.0, &adj, &mut row_match, &mut col_match)
            {
                return Err(Error::DecompositionStalled { residual });
            }
        }
        let perm: Vec<usize> = row_match.iter().map(|j| j.expect("perfect")).collect();
        let lambda = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| r.get(i, j))
            .fold(f64::INFINITY, f64::min);
        for (i, &j) in perm.iter().enumerate() {
            let v = if r.get(i, j) == lambda {
                0.0
            } else {
                (r.get(i, j) - lambda).max(0.0)
            };
            r.set(i, j, v);
            if v <= 0.0 || (v <= thresh && lambda > thresh) {
                row_match[i] = None;
                col_match[j] = None;
            }
        }
        residual -= lambda * n as f64;
        terms.push((lambda, perm));
    }
    Ok(BvnDecomposition {
        terms,
        residual_l1: r.data.iter().sum(),
    })
}

/// BFS augmenting path from the free row `start`.
fn augment(
    start: usize,
    r: &DenseMatrix,
    thresh: f64,
    adj: &[Vec<usize>],
    row_match: &mut [Option<usize>],
    col_match: &mut [Option<usize>],
) -> bool {
    let n = r.n;
    let mut via = vec![usize::MAX; n]; // column -> row it was reached from
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if via[j] != usize::MAX || r.get(i, j) <= thresh {
                continue;
            }
            via[j] = i;
            match col_match[j] {
                Some(next) => queue.push_back(next),
                None => {
                    let mut col = j;
                    loop {
                        let row = via[col];
                        let prev = row_match[row];
                        row_match[row] = Some(col);
                        col_match[col] = Some(row);
                        match prev {
                            Some(c) if row != start => col = c,
                            _ => return true,
                        }
                    }
                }
            }
        }
    }
    false
}

/// Samples a term with probability proportional to its weight, uses it or
/// its inverse with probability 1/2, and turns its cycles into a matching
/// of `g`: 2-cycles on edges are matched, longer cycles contribute every
/// other consecutive pair starting from their smallest vertex, and pairs
/// that are not edges are dropped.
pub fn extract_matching(d: &BvnDecomposition, g: &WeightedGraph, seed: u64) -> Result<Matching> {
    let n = g.n();
    if d.terms.is_empty() {
        return Ok(Matching::empty(n));
    }
    if d.terms.iter().any(|(_, p)| p.len() != n) {
        return Err(Error::validation(
            "decomposition",
            "permutation size differs from the graph",
        ));
    }
    let mut rng = rng_from_seed(seed);
    let total = d.total_weight();
    let mut u = rng.random::<f64>() * total;
    let mut pick = d.terms.len() - 1;
    for (k, (lambda, _)) in d.terms.iter().enumerate() {
        if u < *lambda {
            pick = k;
            break;
        }
        u -= lambda;
    }
    let mut perm = d.terms[pick].1.clone();
    if rng.random::<bool>() {
        let mut inv = vec![0; n];
        for (i, &j) in perm.iter().enumerate() {
            inv[j] = i;
        }
        perm = inv;
    }
    let mut seen = vec![false; n];
    let mut ids = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut cycle = Vec::new();
        let mut v = start;
        while !seen[v] {
            seen[v] = true;
            cycle.push(v);
            v = perm[v];
        }
        for pair in cycle.chunks_exact(2) {
            if let Some(e) = g.find_edge(pair[0], pair[1]) {
                ids.push(e);
            }
        }
    }
    Matching::from_edge_ids(g, ids)
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundingOptions {
    pub depth: usize,
    /// `None` means the 99th percentile of the observed weights.
    pub cutoff: Option<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub cover_budget: usize,
    pub bvn_tol: f64,
    pub matchings: usize,
    pub limits: ComponentLimits,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        Self {
            depth: 3,
            cutoff: None,
            replicates: 200,
            seed: 0,
            cover_budget: 100_000,
            bvn_tol: 1e-7,
            matchings: 100,
            limits: ComponentLimits::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundingReport {
    pub n: usize,
    pub edges: usize,
    pub meta: ScoreMeta,
    pub depth_reductions: Vec<DepthReduction>,
    pub mean_negative_diagonal: f64,
    pub negative_diagonal_count: usize,
    pub projection: ProjectionReport,
    pub symmetric: bool,
    pub bistochastic_defect: f64,
    pub bvn_terms: usize,
    pub bvn_weight: f64,
    pub bvn_residual_l1: f64,
    pub reconstruction_l1: f64,
    pub rounded_performance: f64,
    /// `2 OPT / n` over the solved components.
    pub exact_perf_v: f64,
    pub exact_solved_fraction: f64,
    pub extracted_valid: usize,
    pub extracted_mean_perf_v: f64,
}

/// The whole pipeline on one graph, with an exact optimum for comparison.
pub fn run_pipeline(
    g: &WeightedGraph,
    zeta: &impl MessageLaw,
    opts: &RoundingOptions,
) -> Result<(RoundingReport, ScoreMatrix, BvnDecomposition)> {
    let cutoff = opts.cutoff.unwrap_or_else(|| weight_percentile(g, 0.99));
    let q = build_score_matrix(
        g,
        opts.depth,
        cutoff,
        opts.replicates,
        opts.seed,
        opts.cover_budget,
        zeta,
    )?;
    let dense = q.to_dense()?;
    let (projected, projection) = project_sym_birkhoff(&dense)?;
    let max_terms = g.n() * g.n() + 1;
    let bvn = birkhoff_decompose(&projected, opts.bvn_tol, max_terms)?;
    let reconstruction_l1 = bvn.reconstruct(g.n())?.l1_distance(&projected);
    let rounded = rounded_performance(&q, g)?;
    let exact = exact_opt_by_components(g, opts.limits);
    let n = g.n().max(1) as f64;
    let mut valid = 0;
    let mut perf_sum = 0.0;
    for k in 0..opts.matchings {
        let m = extract_matching(&bvn, g, derive_seed(opts.seed ^ 0x5EED, k as u64))?;
        if m.validate(g).is_ok() {
            valid += 1;
        }
        perf_sum += matching_stats(g, &m)?.perf_v;
    }
    let report = RoundingReport {
        n: g.n(),
        edges: g.edge_count(),
        meta: q.meta,
        depth_reductions: q.depth_reductions.clone(),
        mean_negative_diagonal: q.mean_negative_diagonal(),
        negative_diagonal_count: q.negative_diagonal_count(),
        symmetric: projected.is_symmetric(),
        bistochastic_defect: projected.bistochastic_defect(),
        projection,
        bvn_terms: bvn.terms.len(),
        bvn_weight: bvn.total_weight(),
        bvn_residual_l1: bvn.residual_l1,
        reconstruction_l1,
        rounded_performance: rounded,
        exact_perf_v: 2.0 * exact.value / n,
        exact_solved_fraction: exact.solved_fraction,
        extracted_valid: valid,
        extracted_mean_perf_v: if opts.matchings == 0 {
            0.0
        } else {
            perf_sum / opts.matchings as f64
        },
    };
    Ok((report, q, bvn))
}
