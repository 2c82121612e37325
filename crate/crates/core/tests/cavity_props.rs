use proptest::prelude::*;
use unimatch::cavity::{
    brute_force_opt, cycle_branch_opt, decide_matching, exact_opt_by_components, forest_opt,
    recursion_residual, solve_messages_forest, ComponentLimits,
};
use unimatch::generators::{gen_erdos_renyi, random_tree};
use unimatch::graph::matching_stats;
use unimatch::{WeightLaw, WeightedGraph};

fn small_graph() -> impl Strategy<Value = WeightedGraph> {
    (2usize..9).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|v| (0..v).map(move |u| (u, v))).collect();
        let k = pairs.len();
        (Just(n), Just(pairs), prop::collection::vec((any::<bool>(), 0.01f64..5.0), k))
    })
    .prop_map(|(n, pairs, picks)| {
        let edges = pairs
            .into_iter()
            .zip(picks)
            .filter(|(_, (keep, _))| *keep)
            .map(|((u, v), (_, w))| (u, v, w))
            .take(14);
        WeightedGraph::new(n, edges).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tree_messages_are_optimal(n in 1usize..40, seed in any::<u64>(), uniform in any::<bool>()) {
        let w = if uniform { WeightLaw::uniform(0.0, 1.0).unwrap() } else { WeightLaw::exponential(1.0).unwrap() };
        let g = random_tree(n, &w, seed);
        let f = solve_messages_forest(&g).unwrap();
        prop_assert!(recursion_residual(&g, &f) < 1e-12);
        let d = decide_matching(&g, &f).unwrap();
        d.matching.validate(&g).unwrap();
        let opt = forest_opt(&g).unwrap();
        prop_assert!((d.matching.total_weight(&g) - opt.value).abs() < 1e-9);
    }

    #[test]
    fn cycle_branching_equals_brute_force(g in small_graph()) {
        let bb = brute_force_opt(&g, 24).unwrap();
        let cb = cycle_branch_opt(&g, 14).unwrap();
        prop_assert!((bb.value - cb.value).abs() < 1e-9);
        cb.matching.validate(&g).unwrap();
        let comp = exact_opt_by_components(&g, ComponentLimits::default());
        prop_assert!(comp.is_complete());
        prop_assert!((comp.value - bb.value).abs() < 1e-9);
    }
}

#[test]
fn perf_identity_on_random_graphs() {
    let w = WeightLaw::exponential(1.0).unwrap();
    for seed in 0..20 {
        let g = gen_erdos_renyi(2000, 0.9, &w, seed);
        let s = exact_opt_by_components(&g, ComponentLimits::default());
        let stats = matching_stats(&g, &s.matching).unwrap();
        assert!(stats.identity_defect() <= 1e-12);
    }
}
