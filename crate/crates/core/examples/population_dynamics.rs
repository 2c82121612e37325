//! Population dynamics for a Poisson(2) tree with Uniform[0,1] weights,
//! compared with the grid solution.

use unimatch::rde::{iterate_h, kolmogorov_distance, population_dynamics, IterateOptions, MessageLaw};
use unimatch::{DegreeLaw, WeightLaw};

fn main() -> unimatch::Result<()> {
    let law = DegreeLaw::poisson(2.0)?;
    let weights = WeightLaw::uniform(0.0, 1.0)?;
    let grid = iterate_h(&law, &weights, &IterateOptions::default(), None)?;
    for sweeps in [5, 20, 80] {
        let pool = population_dynamics(&law, &weights, 200_000, sweeps, 7)?;
        println!(
            "{sweeps:>3} sweeps: atom {:.4} (grid {:.4}), mean {:.4}, KS distance {:.4}",
            pool.atom(),
            grid.h.h0(),
            pool.mean(),
            kolmogorov_distance(&grid.h, &pool.samples)
        );
    }
    Ok(())
}
