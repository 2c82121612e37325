//! Messages, decision rule and self loops on a small weighted tree.

use unimatch::cavity::{augment_self_loops, decide_matching, solve_messages_tree, tree_opt};
use unimatch::graph::{Root, RootedTree};
use unimatch::WeightedGraph;

fn main() -> unimatch::Result<()> {
    //      0
    //    /   \
    //   1     2
    //  / \     \
    // 3   4     5
    let g = WeightedGraph::new(
        6,
        [(0, 1, 1.0), (0, 2, 2.5), (1, 3, 1.4), (1, 4, 0.3), (2, 5, 2.0)],
    )?;
    let tree = RootedTree::new(g.clone(), Root::Vertex(0))?;
    let field = solve_messages_tree(&tree);
    for e in g.edges() {
        println!(
            "edge {}-{} w={:.2}  Z({},{})={:.2}  Z({},{})={:.2}",
            e.u,
            e.v,
            e.w,
            e.u,
            e.v,
            field.get(&g, e.u, e.v).unwrap(),
            e.v,
            e.u,
            field.get(&g, e.v, e.u).unwrap()
        );
    }
    let decided = decide_matching(&g, &field)?;
    let opt = tree_opt(&tree);
    println!("decision rule picks {:?}, weight {:.2}", decided.matching.pairs(&g), decided.matching.total_weight(&g));
    println!("tree dynamic programme gives {:.2}", opt.value);

    let (looped, _) = augment_self_loops(&tree, &field);
    println!("self-loop weights {:?}", looped.self_loop_weight);
    println!("unmatched vertices (negative loops) {:?}", looped.selected_loops());
    Ok(())
}
