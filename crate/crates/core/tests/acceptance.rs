//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; the process fails if any
//! criterion fails.

use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::Rng as _;
use rand_distr::{Distribution, Uniform};
use unimatch::asymptotics::{
    degree_conditioned_match_prob, degree_match_counts, estimate_from_graphs, gap_event_counts,
    gap_probability, solve_message_law, vertex_density, GraphFamily, INVERSE_TOL,
};
use unimatch::cavity::{
    bp_iterate, brute_force_opt, decide_matching, exact_opt_by_components, solve_messages_tree,
    tree_opt, BpOptions, ComponentLimits, BRUTE_FORCE_EDGES,
};
use unimatch::generators::{gen_erdos_renyi, gen_path, random_tree};
use unimatch::graph::{matching_stats, Root, RootedTree};
use unimatch::rde::{
    exp_fixed_point_k, exp_fixed_point_on, iterate_h, population_dynamics, IterateOptions,
    MessageLaw,
};
use unimatch::rng::{derive_seed, rng_from_seed};
use unimatch::rounding::{
    load_balance, project_sym_birkhoff, run_pipeline, weight_percentile, DenseMatrix,
    RoundingOptions,
};
use unimatch::{DegreeLaw, Matching, WeightLaw, WeightedGraph};

/// Largest relative `perf_V = mean_degree * perf_E` defect seen so far.
static IDENTITY: Mutex<(f64, usize)> = Mutex::new((0.0, 0));

fn record_identity(g: &WeightedGraph, m: &Matching) {
    let d = matching_stats(g, m)
        .expect("valid matching")
        .identity_defect();
    let mut slot = IDENTITY.lock().unwrap();
    slot.0 = slot.0.max(d);
    slot.1 += 1;
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn exp1() -> WeightLaw {
    WeightLaw::exponential(1.0).unwrap()
}

fn unif01() -> WeightLaw {
    WeightLaw::uniform(0.0, 1.0).unwrap()
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let (mut value_bad, mut unique_bad, mut unique_cases) = (0, 0, 0);
    for case in 0..1000u64 {
        let s = derive_seed(11, case);
        let n = rng_from_seed(s).random_range(1..=12);
        let weights = if case % 2 == 0 { unif01() } else { exp1() };
        let g = random_tree(n, &weights, s);
        let t = RootedTree::new(g.clone(), Root::Vertex(0)).unwrap();
        let dp = tree_opt(&t);
        let bb = brute_force_opt(&g, BRUTE_FORCE_EDGES).unwrap();
        if (dp.value - bb.value).abs() > 1e-9 {
            value_bad += 1;
        }
        // Continuous weights make the optimum unique almost surely; ties
        // within 1e-9 are skipped rather than counted.
        let unique = !has_near_tie(&g, bb.value);
        if unique {
            unique_cases += 1;
            let d = decide_matching(&g, &solve_messages_tree(&t)).unwrap();
            let mut got = d.matching.edge_ids().to_vec();
            let mut want = bb.matching.edge_ids().to_vec();
            got.sort_unstable();
            want.sort_unstable();
            if got != want {
                unique_bad += 1;
            }
        }
        record_identity(&g, &bb.matching);
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        value_bad == 0 && unique_bad == 0 && secs < 60.0,
        format!("value mismatches {value_bad}, decision mismatches {unique_bad}/{unique_cases}, {secs:.2}s"),
    )
}

/// True when some matching other than the optimum comes within 1e-9 of it.
fn has_near_tie(g: &WeightedGraph, best: f64) -> bool {
    let m = g.edge_count();
    let mut count = 0;
    for mask in 0u32..(1 << m) {
        let mut used = vec![false; g.n()];
        let mut w = 0.0;
        let mut ok = true;
        for e in 0..m {
            if mask >> e & 1 == 1 {
                let ed = g.edge(e);
                if used[ed.u] || used[ed.v] {
                    ok = false;
                    break;
                }
                used[ed.u] = true;
                used[ed.v] = true;
                w += ed.w;
            }
        }
        if ok && (w - best).abs() <= 1e-9 {
            count += 1;
        }
    }
    count > 1
}

fn analytic_path_case() -> Verdict {
    let law = DegreeLaw::dirac(2).unwrap();
    let weights = exp1();
    let fp = exp_fixed_point_k(&law, 1.0, 1e-15).unwrap();
    let opts = IterateOptions::default();
    let closed = exp_fixed_point_on(&law, 1.0, 1e-15, opts.grid).unwrap();
    let it = iterate_h(&law, &weights, &opts, None).unwrap();
    let sup = it.h.sup_distance(&closed.h);
    let pool = population_dynamics(&law, &weights, 1_000_000, 100, 2024).unwrap();
    let atom = pool.atom();
    let pass = (fp.k - 2.0 / 3.0).abs() <= 1e-9
        && (fp.h.h0() - 1.0 / 3.0).abs() <= 1e-9
        && sup <= 1e-3
        && (atom - 1.0 / 3.0).abs() <= 0.002;
    verdict(
        pass,
        format!(
            "K={:.12} h(0)={:.12} sup={sup:.2e} pool atom={atom:.5}",
            fp.k,
            fp.h.h0()
        ),
    )
}

fn path_densities() -> Verdict {
    let start = Instant::now();
    let g = gen_path(200_000, &exp1(), 3);
    let t = RootedTree::new(g.clone(), Root::Vertex(0)).unwrap();
    let opt = tree_opt(&t);
    let s = matching_stats(&g, &opt.matching).unwrap();
    record_identity(&g, &opt.matching);
    let secs = start.elapsed().as_secs_f64();
    let pass = (s.matched_edge_fraction - 4.0 / 9.0).abs() <= 0.01
        && (s.perf_e - 2.0 / 3.0).abs() <= 0.01
        && (s.matched_vertex_fraction - 8.0 / 9.0).abs() <= 0.01
        && secs < 30.0;
    verdict(
        pass,
        format!(
            "edge density {:.4}, weight per edge {:.4}, vertex fraction {:.4}, {secs:.2}s",
            s.matched_edge_fraction, s.perf_e, s.matched_vertex_fraction
        ),
    )
}

fn erdos_renyi_densities() -> Verdict {
    let family = GraphFamily::ErdosRenyi { c: 0.8 };
    let table = estimate_from_graphs(
        &family,
        &exp1(),
        &[1000, 10_000],
        20,
        20240,
        ComponentLimits::default(),
    )
    .unwrap();
    {
        let mut slot = IDENTITY.lock().unwrap();
        slot.0 = slot.0.max(table.max_identity_defect);
        slot.1 += table.instances.len();
    }
    let mut pass = table.min_solved_fraction >= 1.0;
    let mut detail = Vec::new();
    for stat in ["edge_perf", "edge_density", "vertex_density"] {
        let small = table.row(1000, stat).unwrap();
        let large = table.row(10_000, stat).unwrap();
        for r in [small, large] {
            pass &= r.difference.abs() <= 3.0 * r.stderr + 0.02;
        }
        // Non-increasing up to noise: any growth of |d| must stay within two
        // combined standard errors.
        let growth = large.difference.abs() - small.difference.abs();
        let noise = small.stderr.hypot(large.stderr);
        pass &= growth <= 2.0 * noise;
        detail.push(format!(
            "{stat} |d| {:.4}->{:.4} (growth z {:.2})",
            small.difference.abs(),
            large.difference.abs(),
            growth / noise
        ));
    }
    verdict(pass, detail.join(", "))
}

fn uniqueness() -> Verdict {
    let laws = [
        ("dirac2", DegreeLaw::dirac(2).unwrap()),
        ("poisson1", DegreeLaw::poisson(1.0).unwrap()),
        ("poisson2", DegreeLaw::poisson(2.0).unwrap()),
    ];
    let opts = IterateOptions::default();
    let mut pass = true;
    let mut worst = 0.0f64;
    let mut min_h0 = 1.0f64;
    for (_, law) in &laws {
        for weights in [exp1(), unif01()] {
            let (t_max, step, _) = opts.grid.resolve(&weights).unwrap();
            let start = unimatch::CdfGrid::from_fn(t_max, step, |t| 1.0 - (-t).exp()).unwrap();
            let a = iterate_h(law, &weights, &opts, None);
            let b = iterate_h(law, &weights, &opts, Some(&start));
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    pass &= a.residual <= 1e-8 && b.residual <= 1e-8;
                    let d = a.h.sup_distance(&b.h);
                    worst = worst.max(d);
                    pass &= d <= 1e-6;
                    min_h0 = min_h0.min(a.h.h0()).min(b.h.h0());
                }
                _ => pass = false,
            }
        }
    }
    pass &= min_h0 > 0.0;
    verdict(
        pass,
        format!("worst sup distance {worst:.2e}, min h(0) {min_h0:.4}"),
    )
}

fn derived_quantities() -> Verdict {
    let law = DegreeLaw::poisson(0.8).unwrap();
    let h0 = exp_fixed_point_k(&law, 1.0, 1e-15).unwrap().h.h0();

    // Degree-conditioned match probability against exact optima on ER graphs.
    let reps = 20;
    let mut per_rep = vec![Vec::new(); 4];
    for r in 0..reps {
        let g = gen_erdos_renyi(10_000, 0.8, &exp1(), derive_seed(606, r));
        let solve = exact_opt_by_components(&g, ComponentLimits::default());
        assert!(solve.is_complete());
        record_identity(&g, &solve.matching);
        for (k, count, matched) in degree_match_counts(&g, &solve.matching, 3) {
            if k >= 1 && count > 0 {
                per_rep[k].push(matched as f64 / count as f64);
            }
        }
    }
    let mut pass = true;
    let mut detail = Vec::new();
    for k in 1..=3 {
        let xs = &per_rep[k];
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let pred = degree_conditioned_match_prob(&law, h0, k);
        pass &= (mean - pred).abs() <= 3.0 * se;
        detail.push(format!("k={k} z={:.2}", (mean - pred) / se));
    }

    // Sum rule.
    let x = law.inv_offspring_pgf(h0, INVERSE_TOL);
    let lhs: f64 = (0..200)
        .map(|k| law.degree_pmf(k) * (1.0 - x.powi(k as i32)))
        .sum();
    let sum_err = (lhs - vertex_density(&law, h0)).abs();
    pass &= sum_err <= 1e-6;
    detail.push(format!("sum rule {sum_err:.1e}"));

    // Gap on the path by direct counting.
    let g = gen_path(200_000, &exp1(), 77);
    let t = RootedTree::new(g.clone(), Root::Vertex(0)).unwrap();
    let opt = tree_opt(&t);
    let (events, trials) = gap_event_counts(&g, &opt.matching, 1);
    let gap = events as f64 / trials as f64;
    pass &= (gap - 1.0 / 6.0).abs() <= 0.01;
    let dirac = DegreeLaw::dirac(2).unwrap();
    let h = solve_message_law(&dirac, &exp1()).unwrap();
    let formula = gap_probability(&h, &exp1(), &dirac, 1, 200_000, 78).unwrap();
    detail.push(format!(
        "path gap counted {gap:.4} over {trials} trials (target 1/6; gap_probability gives {:.4} ± {:.4})",
        formula.value, formula.stderr
    ));
    verdict(pass, detail.join(", "))
}

fn rounding_pipeline() -> Verdict {
    let start = Instant::now();
    let weights = exp1();
    let g = gen_erdos_renyi(2000, 0.8, &weights, 5);
    let zeta = solve_message_law(&DegreeLaw::poisson(0.8).unwrap(), &weights).unwrap();
    let opts = RoundingOptions {
        depth: 3,
        cutoff: Some(weight_percentile(&g, 0.99)),
        seed: 5,
        ..Default::default()
    };
    let (report, scores, _) = run_pipeline(&g, &zeta, &opts).unwrap();
    let exact = exact_opt_by_components(&g, ComponentLimits::default());
    record_identity(&g, &exact.matching);

    let (projected, _) = project_sym_birkhoff(&scores.to_dense().unwrap()).unwrap();
    let a = projected.is_symmetric() && projected.bistochastic_defect() <= 1e-9;

    // (b) fuzzed perturbations of the projected matrix.
    let n = projected.n();
    let mut rng = rng_from_seed(55);
    let mut b = true;
    let mut worst_ratio = 0.0f64;
    for _ in 0..100 {
        let scale = rng.random_range(0.0..0.2);
        let noise = Uniform::new(-1.0, 1.0).unwrap();
        let mut rows = projected.to_rows();
        for row in rows.iter_mut() {
            for x in row.iter_mut() {
                if *x > 0.0 || rng.random_bool(1e-3) {
                    *x = (*x * (1.0 + scale * noise.sample(&mut rng))
                        + scale * 1e-3 * rng.random::<f64>())
                    .max(0.0);
                }
            }
        }
        let m = DenseMatrix::from_rows(&rows).unwrap();
        let dev: f64 = m
            .row_sums()
            .iter()
            .chain(m.col_sums().iter())
            .map(|s| (s - 1.0).abs())
            .sum();
        let eps = dev / n as f64;
        if eps >= 0.5 {
            continue;
        }
        let (s, moved) = load_balance(&m).unwrap();
        b &= s.bistochastic_defect() <= 1e-9 && moved <= 12.0 * dev;
        if dev > 0.0 {
            worst_ratio = worst_ratio.max(moved / dev);
        }
    }

    let c = report.bvn_residual_l1 <= 1e-6 && report.reconstruction_l1 <= 1e-6;
    let d = report.extracted_valid == opts.matchings;
    let ratio = report.rounded_performance / report.exact_perf_v;
    let e = ratio >= 0.95;
    let secs = start.elapsed().as_secs_f64();
    let time_ok = secs < 600.0;
    verdict(
        a && b && c && d && e && time_ok,
        format!(
            "(a) {a} (b) {b} worst moved/dev {worst_ratio:.3} (c) {c} residual {:.1e} (d) {d} {}/{} \
             (e) {e} ratio {ratio:.4}, {secs:.1}s",
            report.bvn_residual_l1, report.extracted_valid, opts.matchings
        ),
    )
}

fn bp_sanity() -> Verdict {
    let weights = exp1();
    let limits = ComponentLimits::default();
    let (mut accepted, mut agree, mut attempt) = (0usize, 0usize, 0u64);
    let mut flagged = Vec::new();
    let mut retried = 0;
    while accepted < 200 {
        let g = gen_erdos_renyi(300, 0.8, &weights, derive_seed(909, attempt));
        attempt += 1;
        if g.components().iter().any(|c| c.edges.len() > 30) {
            continue;
        }
        let exact = exact_opt_by_components(&g, limits);
        assert!(exact.is_complete());
        record_identity(&g, &exact.matching);
        let mut bp = bp_iterate(&g, None, BpOptions::default()).unwrap();
        if !bp.converged {
            retried += 1;
            bp = bp_iterate(
                &g,
                None,
                BpOptions {
                    damping: 0.5,
                    ..Default::default()
                },
            )
            .unwrap();
        }
        if !bp.converged {
            flagged.push(accepted);
        } else if let Ok(d) = decide_matching(&g, &bp.field) {
            if d.matching.validate(&g).is_ok()
                && (d.matching.total_weight(&g) - exact.value).abs() <= 1e-9
            {
                agree += 1;
            }
        }
        accepted += 1;
    }
    let frac = agree as f64 / accepted as f64;
    verdict(
        frac >= 0.95,
        format!(
            "{agree}/{accepted} exact, {retried} retried with damping, flagged non-convergent {flagged:?}, {attempt} graphs drawn"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Verdict); 7] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 analytic path case", analytic_path_case),
        ("3 path densities", path_densities),
        ("4 erdos-renyi densities", erdos_renyi_densities),
        ("5 fixed-point uniqueness", uniqueness),
        ("6 derived quantities", derived_quantities),
        ("9 message passing sanity", bp_sanity),
    ];
    let mut failed = 0;
    let mut report = |name: &str, v: Verdict, took: Duration| {
        failed += usize::from(!v.pass);
        println!(
            "{} criterion {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        );
    };
    for (name, f) in criteria {
        let t = Instant::now();
        let v = f();
        report(name, v, t.elapsed());
    }
    let t = Instant::now();
    let v = rounding_pipeline();
    report("7 rounding pipeline", v, t.elapsed());
    let (worst, count) = *IDENTITY.lock().unwrap();
    report(
        "8 exact identity",
        verdict(
            worst <= 1e-12 && count > 0,
            format!("max relative defect {worst:.1e} over {count} instances"),
        ),
        Duration::ZERO,
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
