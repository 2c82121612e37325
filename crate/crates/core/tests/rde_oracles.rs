use statrs::distribution::{ContinuousCDF, Exp};
use unimatch::asymptotics::{
    edge_density, edge_density_quadrature, edge_perf, edge_perf_quadrature, solve_message_law,
    vertex_density,
};
use unimatch::rde::{
    exp_fixed_point_k, iterate_h, kolmogorov_distance, population_dynamics, sample_from_cdf,
    CdfGrid, IterateOptions,
};
use unimatch::{DegreeLaw, WeightLaw};

#[test]
fn sampling_from_an_exponential_grid() {
    let exp = Exp::new(1.0).unwrap();
    let h = CdfGrid::from_fn(15.0, 1e-3, |t| exp.cdf(t)).unwrap();
    let pool = sample_from_cdf(&h, 200_000, 8);
    assert!((pool.mean() - 1.0).abs() < 0.01, "mean {}", pool.mean());
    assert!(kolmogorov_distance(&h, &pool.samples) <= 0.005);
}

#[test]
fn population_dynamics_tracks_the_grid_solution() {
    for (law, weights) in [
        (DegreeLaw::poisson(2.0).unwrap(), WeightLaw::uniform(0.0, 1.0).unwrap()),
        (DegreeLaw::dirac(3).unwrap(), WeightLaw::exponential(1.0).unwrap()),
    ] {
        let it = iterate_h(&law, &weights, &IterateOptions::default(), None).unwrap();
        let pool = population_dynamics(&law, &weights, 200_000, 60, 12).unwrap();
        let d = kolmogorov_distance(&it.h, &pool.samples);
        assert!(d <= 0.01, "{law:?}: {d}");
    }
}

#[test]
fn poisson_one_closed_form_matches_iteration() {
    let law = DegreeLaw::poisson(1.0).unwrap();
    let fp = exp_fixed_point_k(&law, 1.0, 1e-15).unwrap();
    let it = iterate_h(&law, &WeightLaw::exponential(1.0).unwrap(), &IterateOptions::default(), None).unwrap();
    assert!(it.h.sup_distance(&fp.h) <= 1e-3);
    // K solves K = ∫_0^1 exp(-K s) ds
    let k = fp.k;
    assert!((k - (-(-k).exp_m1()) / k).abs() < 1e-12);
}

#[test]
fn densities_are_consistent() {
    for (law, weights) in [
        (DegreeLaw::poisson(0.8).unwrap(), WeightLaw::exponential(1.0).unwrap()),
        (DegreeLaw::pmf(vec![0.1, 0.2, 0.3, 0.4]).unwrap(), WeightLaw::uniform(0.0, 2.0).unwrap()),
    ] {
        let h = solve_message_law(&law, &weights).unwrap();
        let h0 = h.h0();
        let v = vertex_density(&law, h0);
        assert!((v - law.mean() * edge_density(&law, h0)).abs() < 1e-12);
        // the density from h(0) alone agrees with quadrature over all of h
        assert!((edge_density_quadrature(&h, &weights) - edge_density(&law, h0)).abs() < 2e-3);
        let mc = edge_perf(&h, &weights, 200_000, 3);
        assert!((mc.value - edge_perf_quadrature(&h, &weights)).abs() < 4.0 * mc.stderr + 1e-3);
    }
}
