//! Message passing on finite trees and graphs, and the exact solvers used
//! as its oracles.

mod exact;
mod messages;

pub use exact::{
    brute_force_opt, cycle_branch_opt, exact_opt_by_components, forest_opt, tree_opt,
    ComponentLimits, ComponentMethod, ComponentSolve, Optimum, BRUTE_FORCE_EDGES,
};
pub use messages::{
    augment_self_loops, augmented_residual, bp_iterate, decide_matching, recursion_residual,
    solve_messages_forest, solve_messages_tree, BpOptions, BpOutcome, Decision, MessageField,
    SelfLoopedTree,
};
