//! Plain-text formats: graphs, matchings, CDF grids and sample pools.

use std::fmt::Write as _;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph::{Matching, WeightedGraph};
use crate::rde::{CdfGrid, SamplePool};

/// `n m` on the first line, then one `u v w` line per edge (0-indexed).
pub fn write_graph(g: &WeightedGraph) -> String {
    let mut out = format!("{} {}\n", g.n(), g.edge_count());
    for e in g.edges() {
        writeln!(out, "{} {} {}", e.u, e.v, e.w).expect("string write");
    }
    out
}

/// Inverse of [`write_graph`]. Blank lines and `#` comments are skipped.
pub fn read_graph(text: &str) -> Result<WeightedGraph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "missing `n m` header".into(),
    })?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |s: &str, line: usize| {
        s.parse::<usize>().map_err(|_| Error::Parse {
            line,
            reason: format!("expected a count, found `{s}`"),
        })
    };
    if head.len() != 2 {
        return Err(Error::Parse {
            line,
            reason: "header must be `n m`".into(),
        });
    }
    let n = parse_usize(head[0], line)?;
    let m = parse_usize(head[1], line)?;
    let mut edges = Vec::with_capacity(m);
    for (line, l) in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::Parse {
                line,
                reason: "edge lines are `u v w`".into(),
            });
        }
        let w = f[2].parse::<f64>().map_err(|_| Error::Parse {
            line,
            reason: format!("bad weight `{}`", f[2]),
        })?;
        edges.push((parse_usize(f[0], line)?, parse_usize(f[1], line)?, w));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: 1,
            reason: format!("header announces {m} edges, found {}", edges.len()),
        });
    }
    WeightedGraph::new(n, edges)
}

/// `[[u, v], ...]` with `u < v`, sorted.
pub fn matching_to_json(g: &WeightedGraph, m: &Matching) -> Value {
    serde_json::to_value(m.pairs(g)).expect("pairs serialize")
}

pub fn matching_from_json(g: &WeightedGraph, text: &str) -> Result<Matching> {
    let pairs: Vec<[usize; 2]> = serde_json::from_str(text)?;
    Matching::from_pairs(g, &pairs)
}

/// `t,h` rows; further columns are other CDFs evaluated at the same points.
pub fn cdf_to_csv(h: &CdfGrid, extra: &[(&str, &dyn Fn(f64) -> f64)]) -> String {
    let mut out = String::from("t,h");
    for (name, _) in extra {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for (k, v) in h.values().iter().enumerate() {
        let t = h.t(k);
        write!(out, "{t},{v}").expect("string write");
        for (_, f) in extra {
            write!(out, ",{}", f(t)).expect("string write");
        }
        out.push('\n');
    }
    out
}

pub fn pool_to_csv(pool: &SamplePool) -> String {
    let mut out = String::with_capacity(pool.len() * 12 + 2);
    out.push_str("z\n");
    for z in &pool.samples {
        writeln!(out, "{z}").expect("string write");
    }
    out
}
