//! Universal cover of a graph seen from a directed edge.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::{Root, RootedTree, WeightedGraph};

/// Depth-truncated cover together with the graph vertex each cover vertex
/// copies.
#[derive(Clone, Debug)]
pub struct CoverTree {
    pub tree: RootedTree,
    pub origin: Vec<usize>,
}

/// Tree of non-backtracking walks from the edge `(i, j)`, truncated at
/// depth `depth`.
///
/// Cover vertices 0 and 1 copy `i` and `j`. A walk ending at `v` after
/// arriving from `p` branches into every neighbour of `v` except `p`.
/// Returns `Ok(None)` when `{i, j}` is not an edge of `g`. Vertices at the
/// truncation depth that still have unexplored walks are marked frontier.
pub fn universal_cover(
    g: &WeightedGraph,
    root_edge: (usize, usize),
    depth: usize,
    max_vertices: usize,
) -> Result<Option<CoverTree>> {
    let (i, j) = root_edge;
    let Some(e) = g.find_edge(i, j) else {
        return Ok(None);
    };
    if max_vertices < 2 {
        return Err(Error::Budget {
            what: "universal cover".into(),
            limit: max_vertices,
        });
    }
    let mut cover = WeightedGraph::empty(2);
    cover.push_edge(0, 1, g.edge(e).w);
    let mut origin = vec![i, j];
    let mut level = vec![0usize, 0];
    let mut frontier = vec![false, false];
    // (cover vertex, graph vertex it came from)
    let mut queue = VecDeque::from([(0usize, j), (1usize, i)]);
    while let Some((c, from)) = queue.pop_front() {
        let v = origin[c];
        if level[c] >= depth {
            frontier[c] = g.degree(v) > 1;
            continue;
        }
        for &(u, id) in g.neighbors(v) {
            if u == from {
                continue;
            }
            if cover.n() >= max_vertices {
                return Err(Error::Budget {
                    what: format!("universal cover of ({i}, {j}) at depth {depth}"),
                    limit: max_vertices,
                });
            }
            let child = cover.push_vertex();
            cover.push_edge(c, child, g.edge(id).w);
            origin.push(u);
            level.push(level[c] + 1);
            frontier.push(false);
            queue.push_back((child, v));
        }
    }
    let tree = RootedTree::with_frontier(cover, Root::Edge(0, 1), frontier)?;
    Ok(Some(CoverTree { tree, origin }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_depth_one() {
        let g = WeightedGraph::new(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)]).unwrap();
        let c = universal_cover(&g, (0, 1), 1, 100).unwrap().unwrap();
        assert_eq!(c.tree.graph().n(), 4);
        assert_eq!(c.origin, vec![0, 1, 2, 2]);
        assert_eq!(c.tree.frontier(), &[false, false, true, true]);
    }

    #[test]
    fn four_cycle_unrolls_to_a_path() {
        let g =
            WeightedGraph::new(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 0, 1.0)]).unwrap();
        let c = universal_cover(&g, (0, 1), 2, 100).unwrap().unwrap();
        let t = c.tree.graph();
        assert_eq!(t.n(), 6);
        assert_eq!(t.edge_count(), 5);
        assert!((0..6).all(|v| t.degree(v) <= 2));
    }

    #[test]
    fn missing_edge_gives_empty_cover() {
        let g = WeightedGraph::path(&[1.0, 1.0]);
        assert!(universal_cover(&g, (0, 2), 3, 100).unwrap().is_none());
    }

    #[test]
    fn budget_guard() {
        let g = crate::generators::gen_erdos_renyi(
            30,
            29.0,
            &crate::laws::WeightLaw::uniform(0.0, 1.0).unwrap(),
            1,
        );
        let err = universal_cover(&g, (0, 1), 4, 1000).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
    }

    #[test]
    fn path_leaf_is_not_frontier() {
        let g = WeightedGraph::path(&[2.0, 1.0]);
        let c = universal_cover(&g, (0, 1), 1, 100).unwrap().unwrap();
        assert_eq!(c.tree.graph().n(), 3);
        assert!(c.tree.frontier().iter().all(|&f| !f));
    }
}
