//! Universal cover of a triangle with a tail, and the edge score it yields.

use unimatch::asymptotics::solve_message_law;
use unimatch::cover::universal_cover;
use unimatch::rounding::score_edge;
use unimatch::{DegreeLaw, WeightLaw, WeightedGraph};

fn main() -> unimatch::Result<()> {
    let g = WeightedGraph::new(4, [(0, 1, 1.2), (1, 2, 0.7), (2, 0, 0.9), (2, 3, 1.5)])?;
    let zeta = solve_message_law(&DegreeLaw::poisson(2.0)?, &WeightLaw::exponential(1.0)?)?;
    for depth in 1..=5 {
        let cover = universal_cover(&g, (0, 1), depth, 10_000)?.expect("edge exists");
        let frontier = cover.tree.frontier().iter().filter(|&&f| f).count();
        let score = score_edge(&cover.tree, &zeta, f64::INFINITY, 2000, 3)?;
        println!(
            "depth {depth}: {} cover vertices, {frontier} on the frontier, score of edge 0-1 {score:.3}",
            cover.tree.graph().n()
        );
    }
    Ok(())
}
