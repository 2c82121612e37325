//! Seeded batch runs driven by JSON configs: `rde`, `simulate`, `round` and
//! `oracle`. Every command writes its outputs into a directory and records
//! the seed it used; identical configs give byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::asymptotics::{
    asymptotic_report, estimate_from_graphs, solve_message_law, GraphFamily, GraphTable,
};
use crate::cavity::{
    bp_iterate, brute_force_opt, decide_matching, forest_opt, solve_messages_forest, BpOptions,
    ComponentLimits, BRUTE_FORCE_EDGES,
};
use crate::error::{Error, Result};
use crate::generators::random_tree;
use crate::graph::WeightedGraph;
use crate::io::{cdf_to_csv, matching_to_json, pool_to_csv, write_graph};
use crate::laws::{DegreeLaw, WeightLaw};
use crate::rde::{
    exp_closed_form, exp_fixed_point_on, iterate_h, kolmogorov_distance, population_dynamics,
    IterateOptions, MessageLaw,
};
use crate::rng::{derive_seed, rng_from_seed};
use crate::rounding::{run_pipeline, RoundingOptions};

/// Version expected in every config's `schema` key.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DegreeLawSpec {
    Pmf { pmf: Vec<f64> },
    Poisson { c: f64 },
    Dirac { k: usize },
}

impl DegreeLawSpec {
    pub fn build(&self) -> Result<DegreeLaw> {
        match self {
            DegreeLawSpec::Pmf { pmf } => DegreeLaw::pmf(pmf.clone()),
            DegreeLawSpec::Poisson { c } => DegreeLaw::poisson(*c),
            DegreeLawSpec::Dirac { k } => DegreeLaw::dirac(*k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightLawSpec {
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    Empirical { samples: Vec<f64> },
}

impl WeightLawSpec {
    pub fn build(&self) -> Result<WeightLaw> {
        match self {
            WeightLawSpec::Exponential { rate } => WeightLaw::exponential(*rate),
            WeightLawSpec::Uniform { a, b } => WeightLaw::uniform(*a, *b),
            WeightLawSpec::Empirical { samples } => WeightLaw::empirical(samples.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Path,
    ErdosRenyi { c: f64 },
    ConfigModel { degree_law: DegreeLawSpec },
}

impl GraphSpec {
    pub fn build(&self) -> Result<GraphFamily> {
        match self {
            GraphSpec::Path => Ok(GraphFamily::Path),
            GraphSpec::ErdosRenyi { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::validation(
                        "graph.c",
                        "mean degree must be nonnegative",
                    ));
                }
                Ok(GraphFamily::ErdosRenyi { c: *c })
            }
            GraphSpec::ConfigModel { degree_law } => {
                Ok(GraphFamily::ConfigModel(degree_law.build()?))
            }
        }
    }
}

fn check_schema(schema: u32) -> Result<()> {
    if schema != SCHEMA_VERSION {
        return Err(Error::validation(
            "schema",
            format!("expected {SCHEMA_VERSION}, found {schema}"),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RdeConfig {
    pub schema: u32,
    pub seed: u64,
    pub degree_law: DegreeLawSpec,
    pub weight_law: WeightLawSpec,
    pub iterate: IterateOptions,
    pub pool_size: usize,
    pub sweeps: usize,
    /// Monte-Carlo draws for the report estimators.
    pub samples: usize,
    pub max_degree: usize,
    pub write_pool: bool,
}

impl Default for RdeConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            seed: 0,
            degree_law: DegreeLawSpec::Dirac { k: 2 },
            weight_law: WeightLawSpec::Exponential { rate: 1.0 },
            iterate: IterateOptions::default(),
            pool_size: 100_000,
            sweeps: 100,
            samples: 100_000,
            max_degree: 5,
            write_pool: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub schema: u32,
    pub seed: u64,
    pub graph: GraphSpec,
    pub weight_law: WeightLawSpec,
    pub sizes: Vec<usize>,
    pub replicates: usize,
    pub limits: ComponentLimits,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            seed: 0,
            graph: GraphSpec::ErdosRenyi { c: 0.8 },
            weight_law: WeightLawSpec::Exponential { rate: 1.0 },
            sizes: vec![1000, 10_000],
            replicates: 20,
            limits: ComponentLimits::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundConfig {
    pub schema: u32,
    pub seed: u64,
    pub graph: GraphSpec,
    pub weight_law: WeightLawSpec,
    pub n: usize,
    pub depth: usize,
    pub cutoff: Option<f64>,
    pub replicates: usize,
    pub cover_budget: usize,
    pub bvn_tol: f64,
    pub matchings: usize,
    pub write_matrix: bool,
    pub write_decomposition: bool,
}

impl Default for RoundConfig {
    fn default() -> Self {
        let r = RoundingOptions::default();
        Self {
            schema: SCHEMA_VERSION,
            seed: 0,
            graph: GraphSpec::ErdosRenyi { c: 0.8 },
            weight_law: WeightLawSpec::Exponential { rate: 1.0 },
            n: 2000,
            depth: r.depth,
            cutoff: r.cutoff,
            replicates: r.replicates,
            cover_budget: r.cover_budget,
            bvn_tol: r.bvn_tol,
            matchings: r.matchings,
            write_matrix: false,
            write_decomposition: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub schema: u32,
    pub seed: u64,
    /// Random trees checked against branch and bound.
    pub trees: usize,
    pub tree_max_n: usize,
    /// Random cycles checked with message passing against branch and bound.
    pub cycles: usize,
    pub cycle_max_n: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA_VERSION,
            seed: 0,
            trees: 1000,
            tree_max_n: 12,
            cycles: 200,
            cycle_max_n: 12,
        }
    }
}

/// Parses a config file, checking the schema key.
pub fn load_config<T: for<'de> Deserialize<'de> + HasSchema>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config<T: for<'de> Deserialize<'de> + HasSchema>(text: &str) -> Result<T> {
    let cfg: T =
        serde_json::from_str(text).map_err(|e| Error::validation("config", e.to_string()))?;
    check_schema(cfg.schema())?;
    Ok(cfg)
}

pub trait HasSchema {
    fn schema(&self) -> u32;
    fn set_seed(&mut self, seed: u64);
}

macro_rules! has_schema {
    ($($t:ty),*) => {$(
        impl HasSchema for $t {
            fn schema(&self) -> u32 { self.schema }
            fn set_seed(&mut self, seed: u64) { self.seed = seed; }
        }
    )*};
}
has_schema!(RdeConfig, SimulateConfig, RoundConfig, OracleConfig);

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write(dir, name, &text)
}

/// Paths written by a command.
#[derive(Clone, Debug, Serialize)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
    pub summary: serde_json::Value,
}

/// Grid iteration, population dynamics and (for exponential weights) the
/// closed form, compared on `h(0)` and in Kolmogorov distance.
pub fn cmd_rde(cfg: &RdeConfig, out: &Path) -> Result<Outputs> {
    check_schema(cfg.schema)?;
    let law = cfg.degree_law.build()?;
    let weights = cfg.weight_law.build()?;
    let it = iterate_h(&law, &weights, &cfg.iterate, None)?;
    let pool = population_dynamics(
        &law,
        &weights,
        cfg.pool_size,
        cfg.sweeps,
        derive_seed(cfg.seed, 1),
    )?;
    let closed = match weights {
        WeightLaw::Exponential { rate } => {
            Some(exp_fixed_point_on(&law, rate, 1e-15, cfg.iterate.grid)?)
        }
        _ => None,
    };
    let report = asymptotic_report(
        &law,
        &weights,
        &it.h,
        cfg.max_degree,
        cfg.samples,
        derive_seed(cfg.seed, 2),
    )?;

    let mut files = Vec::new();
    let csv = match &closed {
        Some(c) => {
            let f = |t: f64| exp_closed_form(&law, c.rate, c.k, t);
            cdf_to_csv(&it.h, &[("h_closed_form", &f)])
        }
        None => cdf_to_csv(&it.h, &[]),
    };
    files.push(write(out, "cdf.csv", &csv)?);
    if cfg.write_pool {
        files.push(write(out, "pool.csv", &pool_to_csv(&pool))?);
    }
    files.push(write(out, "report.csv", &report.to_csv())?);
    let summary = json!({
        "command": "rde",
        "seed": cfg.seed,
        "config": cfg,
        "h0": {
            "iterate": it.h.h0(),
            "population": pool.atom(),
            "closed_form": closed.as_ref().map(|c| c.h.h0()),
        },
        "closed_form_k": closed.as_ref().map(|c| c.k),
        "iterate": {
            "residual": it.residual,
            "iterations": it.iterations,
            "warning": it.warning,
            "sup_distance_to_closed_form": closed.as_ref().map(|c| it.h.sup_distance(&c.h)),
        },
        "population": {
            "pool_size": pool.len(),
            "sweeps": pool.sweep_count,
            "kolmogorov_distance": kolmogorov_distance(&it.h, &pool.samples),
        },
        "report": report,
    });
    files.push(write_json(out, "report.json", &summary)?);
    Ok(Outputs { files, summary })
}

/// Exact per-component optima on generated graphs against the limit
/// predictions.
pub fn cmd_simulate(cfg: &SimulateConfig, out: &Path) -> Result<Outputs> {
    check_schema(cfg.schema)?;
    let family = cfg.graph.build()?;
    let weights = cfg.weight_law.build()?;
    let table: GraphTable = estimate_from_graphs(
        &family,
        &weights,
        &cfg.sizes,
        cfg.replicates,
        cfg.seed,
        cfg.limits,
    )?;
    let mut files = vec![write(out, "table.csv", &table.to_csv())?];
    let summary = json!({
        "command": "simulate",
        "seed": cfg.seed,
        "config": cfg,
        "predictions": table.predictions,
        "min_solved_fraction": table.min_solved_fraction,
        "max_identity_defect": table.max_identity_defect,
        "rows": table.rows,
    });
    files.push(write_json(out, "report.json", &summary)?);
    Ok(Outputs { files, summary })
}

/// The rounding pipeline on one generated graph.
pub fn cmd_round(cfg: &RoundConfig, out: &Path) -> Result<Outputs> {
    check_schema(cfg.schema)?;
    let family = cfg.graph.build()?;
    let weights = cfg.weight_law.build()?;
    let g = family.generate(cfg.n, &weights, derive_seed(cfg.seed, 0));
    let zeta = solve_message_law(&family.limit_law()?, &weights)?;
    let opts = RoundingOptions {
        depth: cfg.depth,
        cutoff: cfg.cutoff,
        replicates: cfg.replicates,
        seed: derive_seed(cfg.seed, 1),
        cover_budget: cfg.cover_budget,
        bvn_tol: cfg.bvn_tol,
        matchings: cfg.matchings,
        limits: ComponentLimits::default(),
    };
    let (report, scores, bvn) = run_pipeline(&g, &zeta, &opts)?;
    let mut files = vec![write(out, "graph.txt", &write_graph(&g))?];
    if cfg.write_matrix {
        files.push(write(out, "scores.csv", &scores.to_csv()?)?);
    }
    if cfg.write_decomposition {
        files.push(write_json(out, "decomposition.json", &bvn)?);
    }
    let summary = json!({
        "command": "round",
        "seed": cfg.seed,
        "config": cfg,
        "ratio_to_exact": if report.exact_perf_v > 0.0 { Some(report.rounded_performance / report.exact_perf_v) } else { None },
        "report": report,
    });
    files.push(write_json(out, "diagnostics.json", &summary)?);
    Ok(Outputs { files, summary })
}

#[derive(Clone, Debug, Serialize)]
struct Counterexample {
    suite: &'static str,
    case: usize,
    graph: String,
    expected: f64,
    found: f64,
    matching: serde_json::Value,
}

fn weight_law_for(case: usize) -> WeightLaw {
    if case % 2 == 0 {
        WeightLaw::uniform(0.0, 1.0).expect("valid")
    } else {
        WeightLaw::exponential(1.0).expect("valid")
    }
}

fn cycle_graph(n: usize, weights: &WeightLaw, seed: u64) -> WeightedGraph {
    let mut rng = rng_from_seed(seed);
    let mut g = WeightedGraph::empty(n);
    for v in 0..n {
        let w = weights.sample(&mut rng);
        g.push_edge(v, (v + 1) % n, w);
    }
    g
}

/// Oracle suites: tree dynamic programming and the message decision rule
/// against branch and bound on random trees, then message passing against
/// branch and bound on random cycles. Any mismatch is dumped and reported
/// as an error.
pub fn cmd_oracle(cfg: &OracleConfig, out: &Path) -> Result<Outputs> {
    check_schema(cfg.schema)?;
    if cfg.tree_max_n < 1 || cfg.cycle_max_n < 3 {
        return Err(Error::validation(
            "tree_max_n",
            "trees need n >= 1 and cycles n >= 3",
        ));
    }
    let mut bad = Vec::new();
    for case in 0..cfg.trees {
        let s = derive_seed(cfg.seed, case as u64);
        let n = rng_from_seed(s).random_range(1..=cfg.tree_max_n);
        let g = random_tree(n, &weight_law_for(case), s);
        let dp = forest_opt(&g)?;
        let bb = brute_force_opt(&g, BRUTE_FORCE_EDGES)?;
        let decided = decide_matching(&g, &solve_messages_forest(&g)?)?;
        let dv = decided.matching.total_weight(&g);
        for (found, m) in [(dp.value, &dp.matching), (dv, &decided.matching)] {
            if (found - bb.value).abs() > 1e-9 {
                bad.push(Counterexample {
                    suite: "tree",
                    case,
                    graph: write_graph(&g),
                    expected: bb.value,
                    found,
                    matching: matching_to_json(&g, m),
                });
            }
        }
    }
    let mut not_converged = Vec::new();
    for case in 0..cfg.cycles {
        let s = derive_seed(cfg.seed ^ 0xC1C1E, case as u64);
        let n = rng_from_seed(s).random_range(3..=cfg.cycle_max_n);
        let g = cycle_graph(n, &weight_law_for(case), s);
        let bb = brute_force_opt(&g, BRUTE_FORCE_EDGES)?;
        let bp = bp_iterate(&g, None, BpOptions::default())?;
        if !bp.converged {
            not_converged.push(case);
            continue;
        }
        match decide_matching(&g, &bp.field) {
            Ok(d) if (d.matching.total_weight(&g) - bb.value).abs() <= 1e-9 => {}
            Ok(d) => bad.push(Counterexample {
                suite: "cycle",
                case,
                graph: write_graph(&g),
                expected: bb.value,
                found: d.matching.total_weight(&g),
                matching: matching_to_json(&g, &d.matching),
            }),
            Err(_) => bad.push(Counterexample {
                suite: "cycle",
                case,
                graph: write_graph(&g),
                expected: bb.value,
                found: f64::NAN,
                matching: serde_json::Value::Null,
            }),
        }
    }
    let summary = json!({
        "command": "oracle",
        "seed": cfg.seed,
        "config": cfg,
        "trees": cfg.trees,
        "cycles": cfg.cycles,
        "cycles_not_converged": not_converged,
        "mismatches": bad.len(),
    });
    let mut files = vec![write_json(out, "report.json", &summary)?];
    if !bad.is_empty() {
        let dump = write_json(out, "counterexamples.json", &bad)?;
        files.push(dump.clone());
        return Err(Error::OracleMismatch {
            failures: bad.len(),
            dump: dump.display().to_string(),
        });
    }
    Ok(Outputs { files, summary })
}
