//! The path limit: degree law δ_2 with Exp(1) weights, solved three ways.

use unimatch::asymptotics::{edge_density, edge_perf_quadrature, vertex_density};
use unimatch::rde::{exp_fixed_point_k, iterate_h, IterateOptions};
use unimatch::{DegreeLaw, WeightLaw};

fn main() -> unimatch::Result<()> {
    let law = DegreeLaw::dirac(2)?;
    let weights = WeightLaw::exponential(1.0)?;

    let closed = exp_fixed_point_k(&law, 1.0, 1e-15)?;
    println!("closed form: K = {:.12}, h(0) = {:.12}", closed.k, closed.h.h0());

    let it = iterate_h(&law, &weights, &IterateOptions::default(), None)?;
    println!(
        "grid iteration: {} steps, residual {:.1e}, sup distance to closed form {:.1e}",
        it.iterations,
        it.residual,
        it.h.sup_distance(&closed.h)
    );
    for t in [0.0, 0.5, 1.0, 2.0, 4.0] {
        println!("  h({t}) = {:.5}", it.h.eval(t));
    }

    let h0 = it.h.h0();
    println!("matched-edge density {:.5} (4/9 = {:.5})", edge_density(&law, h0), 4.0 / 9.0);
    println!("matched-vertex fraction {:.5}", vertex_density(&law, h0));
    println!("weight per edge {:.5}", edge_perf_quadrature(&it.h, &weights));
    Ok(())
}
