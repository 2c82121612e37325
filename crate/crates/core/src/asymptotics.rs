//! Limit statistics of optimal matchings and their finite-graph estimators.

use rayon::prelude::*;
use serde::Serialize;

use crate::cavity::{exact_opt_by_components, ComponentLimits};
use crate::error::{Error, Result};
use crate::fft::convolve;
use crate::generators::{gen_config_model_iid, gen_erdos_renyi, gen_path};
use crate::graph::{matching_stats, Matching, WeightedGraph};
use crate::laws::{DegreeLaw, WeightLaw};
use crate::rde::{exp_fixed_point_k, iterate_h, CdfGrid, IterateOptions, MessageLaw};
use crate::rng::{derive_rng, derive_seed, Rng};

/// Bisection tolerance for `φ̂^{-1}`.
pub const INVERSE_TOL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
    Empirical,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Zero for deterministic methods.
    pub stderr: f64,
    pub method: Method,
}

impl Estimate {
    fn exact(value: f64, method: Method) -> Self {
        Self {
            value,
            stderr: 0.0,
            method,
        }
    }
}

const MC_CHUNK: usize = 4096;

/// Mean of `f` over `replicates` draws, chunked so the result does not
/// depend on the thread count.
fn monte_carlo(replicates: usize, seed: u64, f: impl Fn(&mut Rng) -> f64 + Sync) -> Estimate {
    if replicates == 0 {
        return Estimate {
            value: f64::NAN,
            stderr: f64::NAN,
            method: Method::MonteCarlo,
        };
    }
    let chunks = replicates.div_ceil(MC_CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = derive_rng(seed, c as u64);
            let len = MC_CHUNK.min(replicates - c * MC_CHUNK);
            (0..len).fold((0.0, 0.0), |(s, s2), _| {
                let x = f(&mut rng);
                (s + x, s2 + x * x)
            })
        })
        .collect();
    let (s, s2) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = replicates as f64;
    let mean = s / n;
    let var = if replicates > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
        method: Method::MonteCarlo,
    }
}

/// `E[W 1(Z + Z' < W)]` by Monte Carlo.
pub fn edge_perf(
    zeta: &impl MessageLaw,
    weights: &WeightLaw,
    replicates: usize,
    seed: u64,
) -> Estimate {
    monte_carlo(replicates, seed, |rng| {
        let (z1, z2) = (zeta.sample(rng), zeta.sample(rng));
        let w = weights.sample(rng);
        if z1 + z2 < w {
            w
        } else {
            0.0
        }
    })
}

/// `P(Z + Z' < W)` by Monte Carlo.
pub fn edge_density_mc(
    zeta: &impl MessageLaw,
    weights: &WeightLaw,
    replicates: usize,
    seed: u64,
) -> Estimate {
    monte_carlo(replicates, seed, |rng| {
        let (z1, z2) = (zeta.sample(rng), zeta.sample(rng));
        f64::from(u8::from(z1 + z2 < weights.sample(rng)))
    })
}

/// `E[g(Z + Z')]` with ζ discretised as its atom at 0 plus each grid cell's
/// mass at the cell midpoint; the tail beyond the grid sits one cell past
/// `t_max`.
fn self_convolution_expectation(h: &CdfGrid, g: impl Fn(f64) -> f64) -> f64 {
    let step = h.step();
    let atom = h.h0();
    let mut cells = h.cell_masses();
    cells.push(1.0 - h.values().last().expect("nonempty"));
    let mid = |i: usize| (i as f64 + 0.5) * step;
    let mut total = atom * atom * g(0.0);
    total += 2.0
        * atom
        * cells
            .iter()
            .enumerate()
            .map(|(i, p)| p * g(mid(i)))
            .sum::<f64>();
    // cells i and j sum to (i + j + 1) * step
    let pair = convolve(&cells, &cells);
    total += pair
        .iter()
        .enumerate()
        .map(|(m, p)| p * g((m + 1) as f64 * step))
        .sum::<f64>();
    total
}

/// `E[W 1(Z + Z' < W)]` by quadrature on the grid.
pub fn edge_perf_quadrature(h: &CdfGrid, weights: &WeightLaw) -> f64 {
    self_convolution_expectation(h, |s| weights.tail_first_moment(s))
}

/// `P(Z + Z' < W)` by quadrature on the grid, independent of the closed form.
pub fn edge_density_quadrature(h: &CdfGrid, weights: &WeightLaw) -> f64 {
    self_convolution_expectation(h, |s| 1.0 - weights.cdf(s))
}

/// `(1 - φ(x)) / φ'(1)` with `x = φ̂^{-1}(h0)`.
pub fn edge_density(law: &DegreeLaw, h0: f64) -> f64 {
    vertex_density(law, h0) / law.mean()
}

/// `1 - φ(x)` with `x = φ̂^{-1}(h0)`.
pub fn vertex_density(law: &DegreeLaw, h0: f64) -> f64 {
    let x = law.inv_offspring_pgf(h0, INVERSE_TOL);
    (1.0 - law.pgf(x)).clamp(0.0, 1.0)
}

/// `1 - x^k` with `x = φ̂^{-1}(h0)`.
pub fn degree_conditioned_match_prob(law: &DegreeLaw, h0: f64, k: usize) -> f64 {
    let x = law.inv_offspring_pgf(h0, INVERSE_TOL);
    1.0 - x.powi(k as i32)
}

/// Probability that no child of `v` is matched, given that the root edge
/// `(u, v)` is matched and `v` has `k` children:
/// `h0^k (k + 1) / (1 - x^(k+1)) * E[1(W >= Z) F_W(W - Z)^k]`, with `F_W` the
/// weight CDF and `x = φ̂^{-1}(h0)`; `(1 - x^(k+1)) / (k + 1)` is the limit
/// probability that the root edge is matched given `k` children. For `k = 0`
/// the event is certain.
pub fn gap_probability(
    zeta: &impl MessageLaw,
    weights: &WeightLaw,
    law: &DegreeLaw,
    k: usize,
    replicates: usize,
    seed: u64,
) -> Result<Estimate> {
    if k == 0 {
        return Ok(Estimate::exact(1.0, Method::ClosedForm));
    }
    let h0 = zeta.atom();
    let x = law.inv_offspring_pgf(h0, INVERSE_TOL);
    let denom = 1.0 - x.powi(k as i32 + 1);
    if denom <= 0.0 {
        return Err(Error::Degenerate(format!(
            "a vertex with {k} children is never matched, so the gap law is undefined"
        )));
    }
    let prefactor = h0.powi(k as i32) / denom * (k + 1) as f64;
    let inner = monte_carlo(replicates, seed, |rng| {
        let w = weights.sample(rng);
        let z = zeta.sample(rng);
        if w >= z {
            weights.cdf(w - z).powi(k as i32)
        } else {
            0.0
        }
    });
    Ok(Estimate {
        value: prefactor * inner.value,
        stderr: prefactor * inner.stderr,
        method: Method::MonteCarlo,
    })
}

/// One line of a report: a statistic, how it was obtained and, when there
/// is one, the prediction it is compared with.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub method: Method,
    pub value: f64,
    pub stderr: f64,
    pub prediction: Option<f64>,
    pub z_score: Option<f64>,
}

impl ReportRow {
    pub fn new(name: impl Into<String>, est: Estimate, prediction: Option<f64>) -> Self {
        let z_score = prediction.map(|p| z_score(est.value - p, est.stderr));
        Self {
            name: name.into(),
            method: est.method,
            value: est.value,
            stderr: est.stderr,
            prediction,
            z_score,
        }
    }
}

fn z_score(diff: f64, stderr: f64) -> f64 {
    if stderr > 0.0 {
        diff / stderr
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

pub const REPORT_CSV_HEADER: &str = "name,method,value,stderr,prediction,z_score";

fn csv_opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(REPORT_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let method = serde_json::to_value(r.method).expect("unit enum");
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.name,
            method.as_str().expect("string tag"),
            r.value,
            r.stderr,
            csv_opt(r.prediction),
            csv_opt(r.z_score)
        ));
    }
    out
}

/// Every limit statistic for one `(degree law, weight law)` pair.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticReport {
    pub h0: f64,
    pub edge_perf: Estimate,
    pub edge_density: Estimate,
    pub vertex_density: Estimate,
    /// `(k, P(matched | degree k))`.
    pub degree_match: Vec<(usize, f64)>,
    /// `(k children, gap probability)`.
    pub gaps: Vec<(usize, Estimate)>,
    pub rows: Vec<ReportRow>,
}

impl AsymptoticReport {
    pub fn to_csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

/// Evaluates every statistic from a converged grid `h`. Gap rows whose
/// conditioning event has probability zero are skipped.
pub fn asymptotic_report(
    law: &DegreeLaw,
    weights: &WeightLaw,
    h: &CdfGrid,
    max_degree: usize,
    replicates: usize,
    seed: u64,
) -> Result<AsymptoticReport> {
    let h0 = h.h0();
    let perf_q = edge_perf_quadrature(h, weights);
    let perf_mc = edge_perf(h, weights, replicates, derive_seed(seed, 0));
    let dens = edge_density(law, h0);
    let dens_q = edge_density_quadrature(h, weights);
    let dens_mc = edge_density_mc(h, weights, replicates, derive_seed(seed, 1));
    let vdens = vertex_density(law, h0);

    let mut rows = vec![
        ReportRow::new("h0", Estimate::exact(h0, Method::Quadrature), None),
        ReportRow::new(
            "edge_perf",
            Estimate::exact(perf_q, Method::Quadrature),
            None,
        ),
        ReportRow::new("edge_perf", perf_mc, Some(perf_q)),
        ReportRow::new(
            "edge_density",
            Estimate::exact(dens, Method::ClosedForm),
            None,
        ),
        ReportRow::new(
            "edge_density",
            Estimate::exact(dens_q, Method::Quadrature),
            Some(dens),
        ),
        ReportRow::new("edge_density", dens_mc, Some(dens)),
        ReportRow::new(
            "vertex_density",
            Estimate::exact(vdens, Method::ClosedForm),
            None,
        ),
    ];
    let degree_match: Vec<(usize, f64)> = (0..=max_degree)
        .map(|k| (k, degree_conditioned_match_prob(law, h0, k)))
        .collect();
    for &(k, p) in &degree_match {
        rows.push(ReportRow::new(
            format!("match_prob_deg{k}"),
            Estimate::exact(p, Method::ClosedForm),
            None,
        ));
    }
    let mut gaps = Vec::new();
    for k in 1..=max_degree {
        if law.offspring_pmf(k) == 0.0 {
            continue;
        }
        match gap_probability(
            h,
            weights,
            law,
            k,
            replicates,
            derive_seed(seed, 2 + k as u64),
        ) {
            Ok(est) => {
                rows.push(ReportRow::new(format!("gap_children{k}"), est, None));
                gaps.push((k, est));
            }
            Err(Error::Degenerate(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(AsymptoticReport {
        h0,
        edge_perf: Estimate::exact(perf_q, Method::Quadrature),
        edge_density: Estimate::exact(dens, Method::ClosedForm),
        vertex_density: Estimate::exact(vdens, Method::ClosedForm),
        degree_match,
        gaps,
        rows,
    })
}

/// Solves for ζ: closed form for exponential weights, grid iteration
/// otherwise.
pub fn solve_message_law(law: &DegreeLaw, weights: &WeightLaw) -> Result<CdfGrid> {
    match weights {
        WeightLaw::Exponential { rate } => Ok(exp_fixed_point_k(law, *rate, 1e-15)?.h),
        _ => Ok(iterate_h(law, weights, &IterateOptions::default(), None)?.h),
    }
}

/// Random graph families with a known local limit.
#[derive(Clone, Debug, PartialEq)]
pub enum GraphFamily {
    Path,
    ErdosRenyi { c: f64 },
    ConfigModel(DegreeLaw),
}

impl GraphFamily {
    /// Degree law of the limiting tree.
    pub fn limit_law(&self) -> Result<DegreeLaw> {
        match self {
            GraphFamily::Path => DegreeLaw::dirac(2),
            GraphFamily::ErdosRenyi { c } => DegreeLaw::poisson(*c),
            GraphFamily::ConfigModel(law) => Ok(law.clone()),
        }
    }

    pub fn generate(&self, n: usize, weights: &WeightLaw, seed: u64) -> WeightedGraph {
        match self {
            GraphFamily::Path => gen_path(n, weights, seed),
            GraphFamily::ErdosRenyi { c } => gen_erdos_renyi(n, *c, weights, seed),
            GraphFamily::ConfigModel(law) => gen_config_model_iid(n, law, weights, seed).graph,
        }
    }
}

/// Limit values of the three headline statistics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Predictions {
    pub h0: f64,
    pub edge_perf: f64,
    pub edge_density: f64,
    pub vertex_density: f64,
}

impl Predictions {
    pub fn compute(law: &DegreeLaw, weights: &WeightLaw) -> Result<Self> {
        let h = solve_message_law(law, weights)?;
        Ok(Self {
            h0: h.h0(),
            edge_perf: edge_perf_quadrature(&h, weights),
            edge_density: edge_density(law, h.h0()),
            vertex_density: vertex_density(law, h.h0()),
        })
    }
}

/// Statistics of one optimum, restricted to the solved components.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InstanceStats {
    pub n: usize,
    pub edges: usize,
    pub edge_density: f64,
    pub edge_perf: f64,
    pub vertex_density: f64,
    pub solved_fraction: f64,
    /// `|perf_V - mean_degree * perf_E|` relative to `perf_V`.
    pub identity_defect: f64,
    se_edge_density: f64,
    se_edge_perf: f64,
    se_vertex_density: f64,
}

fn instance_stats(g: &WeightedGraph, limits: ComponentLimits) -> Result<InstanceStats> {
    let solve = exact_opt_by_components(g, limits);
    if solve.solved_fraction < 0.99 {
        let largest = solve
            .excluded
            .iter()
            .map(|c| c.edges.len())
            .max()
            .unwrap_or(0);
        return Err(Error::Budget {
            what: format!(
                "exact optimum covers only {:.4} of the edges (largest excluded component has {largest} edges)",
                solve.solved_fraction
            ),
            limit: limits.component_limit,
        });
    }
    let identity_defect = matching_stats(g, &solve.matching)?.identity_defect();
    let mut in_excluded_edge = vec![false; g.edge_count()];
    let mut in_excluded_vertex = vec![false; g.n()];
    for comp in &solve.excluded {
        comp.edges.iter().for_each(|&e| in_excluded_edge[e] = true);
        comp.vertices
            .iter()
            .for_each(|&v| in_excluded_vertex[v] = true);
    }
    let m: &Matching = &solve.matching;
    let edge_vals: Vec<(f64, f64)> = (0..g.edge_count())
        .filter(|&e| !in_excluded_edge[e])
        .map(|e| {
            let hit = m.contains_edge(e);
            (
                f64::from(u8::from(hit)),
                if hit { g.edge(e).w } else { 0.0 },
            )
        })
        .collect();
    let vertex_vals: Vec<f64> = (0..g.n())
        .filter(|&v| !in_excluded_vertex[v])
        .map(|v| f64::from(u8::from(m.is_matched(v))))
        .collect();
    let (d, sd) = mean_se(edge_vals.iter().map(|x| x.0));
    let (p, sp) = mean_se(edge_vals.iter().map(|x| x.1));
    let (vd, svd) = mean_se(vertex_vals.iter().copied());
    Ok(InstanceStats {
        n: g.n(),
        edges: g.edge_count(),
        edge_density: d,
        edge_perf: p,
        vertex_density: vd,
        solved_fraction: solve.solved_fraction,
        identity_defect,
        se_edge_density: sd,
        se_edge_perf: sp,
        se_vertex_density: svd,
    })
}

/// Mean and naive standard error of the mean.
fn mean_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
    for x in xs {
        n += 1.0;
        s += x;
        s2 += x * x;
    }
    if n == 0.0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = s / n;
    let var = if n > 1.0 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    (mean, (var / n).sqrt())
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphTableRow {
    pub n: usize,
    pub statistic: &'static str,
    pub replicates: usize,
    pub empirical: f64,
    /// Across replicates when there are at least two, otherwise the naive
    /// within-graph standard error.
    pub stderr: f64,
    pub prediction: f64,
    pub difference: f64,
    pub z_score: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GraphTable {
    pub predictions: Predictions,
    pub rows: Vec<GraphTableRow>,
    pub min_solved_fraction: f64,
    pub max_identity_defect: f64,
    pub instances: Vec<InstanceStats>,
}

pub const TABLE_CSV_HEADER: &str =
    "n,statistic,replicates,empirical,stderr,prediction,difference,z_score";

impl GraphTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TABLE_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.n,
                r.statistic,
                r.replicates,
                r.empirical,
                r.stderr,
                r.prediction,
                r.difference,
                r.z_score
            ));
        }
        out
    }

    pub fn row(&self, n: usize, statistic: &str) -> Option<&GraphTableRow> {
        self.rows
            .iter()
            .find(|r| r.n == n && r.statistic == statistic)
    }
}

/// Exact per-component optima on generated graphs, tabulated against the
/// limit predictions. Replicate `r` of size index `i` uses the seed stream
/// `(i << 32) | r`.
pub fn estimate_from_graphs(
    family: &GraphFamily,
    weights: &WeightLaw,
    sizes: &[usize],
    replicates: usize,
    seed: u64,
    limits: ComponentLimits,
) -> Result<GraphTable> {
    let predictions = Predictions::compute(&family.limit_law()?, weights)?;
    let mut rows = Vec::new();
    let mut instances = Vec::new();
    for (i, &n) in sizes.iter().enumerate() {
        let stats: Vec<InstanceStats> = (0..replicates)
            .into_par_iter()
            .map(|r| {
                let s = derive_seed(seed, ((i as u64) << 32) | r as u64);
                instance_stats(&family.generate(n, weights, s), limits)
            })
            .collect::<Result<_>>()?;
        if stats.is_empty() {
            continue;
        }
        type Pick = fn(&InstanceStats) -> (f64, f64);
        let columns: [(&'static str, Pick, f64); 3] = [
            (
                "edge_density",
                |s| (s.edge_density, s.se_edge_density),
                predictions.edge_density,
            ),
            (
                "edge_perf",
                |s| (s.edge_perf, s.se_edge_perf),
                predictions.edge_perf,
            ),
            (
                "vertex_density",
                |s| (s.vertex_density, s.se_vertex_density),
                predictions.vertex_density,
            ),
        ];
        for (name, pick, prediction) in columns {
            let (mean, se_across) = mean_se(stats.iter().map(|s| pick(s).0));
            let stderr = if stats.len() >= 2 {
                se_across
            } else {
                pick(&stats[0]).1
            };
            let difference = mean - prediction;
            rows.push(GraphTableRow {
                n,
                statistic: name,
                replicates: stats.len(),
                empirical: mean,
                stderr,
                prediction,
                difference,
                z_score: z_score(difference, stderr),
            });
        }
        instances.extend(stats);
    }
    Ok(GraphTable {
        predictions,
        rows,
        min_solved_fraction: instances
            .iter()
            .map(|s| s.solved_fraction)
            .fold(1.0, f64::min),
        max_identity_defect: instances
            .iter()
            .map(|s| s.identity_defect)
            .fold(0.0, f64::max),
        instances,
    })
}

/// `(k, vertices of degree k, matched vertices of degree k)` for
/// `k = 0..=max_degree`.
pub fn degree_match_counts(
    g: &WeightedGraph,
    m: &Matching,
    max_degree: usize,
) -> Vec<(usize, usize, usize)> {
    let mut counts = vec![(0usize, 0usize); max_degree + 1];
    for v in 0..g.n() {
        let d = g.degree(v);
        if d <= max_degree {
            counts[d].0 += 1;
            counts[d].1 += usize::from(m.is_matched(v));
        }
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| (k, a, b))
        .collect()
}

/// Direct gap counting over matched edges `(u, v)` in both orientations
/// with `deg(v) = k + 1`: returns `(events, trials)` where the event is that
/// no other neighbour of `v` is matched.
pub fn gap_event_counts(g: &WeightedGraph, m: &Matching, k: usize) -> (usize, usize) {
    let (mut events, mut trials) = (0, 0);
    for &e in m.edge_ids() {
        let edge = g.edge(e);
        for (u, v) in [(edge.u, edge.v), (edge.v, edge.u)] {
            if g.degree(v) != k + 1 {
                continue;
            }
            trials += 1;
            let gap = g
                .neighbors(v)
                .iter()
                .all(|&(x, _)| x == u || !m.is_matched(x));
            events += usize::from(gap);
        }
    }
    (events, trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_closed_forms() {
        let law = DegreeLaw::dirac(2).unwrap();
        assert!((edge_density(&law, 1.0 / 3.0) - 4.0 / 9.0).abs() < 1e-12);
        assert!((vertex_density(&law, 1.0 / 3.0) - 8.0 / 9.0).abs() < 1e-12);
        assert!((degree_conditioned_match_prob(&law, 1.0 / 3.0, 2) - 8.0 / 9.0).abs() < 1e-12);
        assert_eq!(degree_conditioned_match_prob(&law, 1.0 / 3.0, 0), 0.0);
    }

    #[test]
    fn dimer_closed_forms() {
        let law = DegreeLaw::dirac(1).unwrap();
        assert_eq!(edge_density(&law, 1.0), 1.0);
        assert_eq!(vertex_density(&law, 1.0), 1.0);
    }

    #[test]
    fn full_inverse_gives_zero_density() {
        let law = DegreeLaw::poisson(2.0).unwrap();
        assert!(edge_density(&law, 1.0).abs() < 1e-12);
    }

    #[test]
    fn path_quadrature() {
        let law = DegreeLaw::dirac(2).unwrap();
        let w = WeightLaw::exponential(1.0).unwrap();
        let h = solve_message_law(&law, &w).unwrap();
        assert!((edge_perf_quadrature(&h, &w) - 2.0 / 3.0).abs() < 1e-5);
        assert!((edge_density_quadrature(&h, &w) - 4.0 / 9.0).abs() < 1e-5);
    }

    #[test]
    fn gap_with_no_children_is_certain() {
        let h = CdfGrid::new(0.01, vec![1.0; 5]).unwrap();
        let law = DegreeLaw::dirac(1).unwrap();
        let w = WeightLaw::exponential(1.0).unwrap();
        let g = gap_probability(&h, &w, &law, 0, 10, 1).unwrap();
        assert_eq!(g.value, 1.0);
        // h0 = 1 under Poisson(2) forces φ̂^{-1}(h0) = 1
        let poisson = DegreeLaw::poisson(2.0).unwrap();
        assert!(matches!(
            gap_probability(&h, &w, &poisson, 1, 10, 1),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn path_gap_is_one_quarter() {
        // E[1(W >= Z) (1 - e^{Z - W})] = 2/3 - 1/3, prefactor (1/3) * 2 / (8/9)
        let law = DegreeLaw::dirac(2).unwrap();
        let w = WeightLaw::exponential(1.0).unwrap();
        let h = solve_message_law(&law, &w).unwrap();
        let g = gap_probability(&h, &w, &law, 1, 400_000, 3).unwrap();
        assert!((g.value - 0.25).abs() < 4.0 * g.stderr + 1e-3, "{g:?}");
    }

    #[test]
    fn gap_counting_on_small_path() {
        // 0-1-2-3 with the middle edge matched: both sides have a gap
        let g = WeightedGraph::path(&[1.0, 5.0, 1.0]);
        let m = Matching::from_edge_ids(&g, [1]).unwrap();
        assert_eq!(gap_event_counts(&g, &m, 1), (2, 2));
        let m = Matching::from_edge_ids(&g, [0, 2]).unwrap();
        assert_eq!(gap_event_counts(&g, &m, 1), (0, 2));
    }
}
