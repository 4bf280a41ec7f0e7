//! Enumerating the game tree and walking it by id.

use drag::model::canonical_instance;
use drag::tree::{GameTree, DEFAULT_SIZE_CAP};

fn main() {
    for horizon in 1..=6 {
        let inst = canonical_instance().with_horizon(horizon).unwrap();
        let tree = GameTree::build(&inst, DEFAULT_SIZE_CAP).unwrap();
        let leaves = (0..tree.len()).filter(|&h| tree.is_leaf(h)).count();
        println!("T={horizon}: {:>7} histories, {:>7} leaves, per stage {:?}", tree.len(), leaves, tree.stage_sizes());
    }

    let inst = canonical_instance().with_horizon(4).unwrap();
    let tree = GameTree::build(&inst, DEFAULT_SIZE_CAP).unwrap();
    let deepest = tree.stage(tree.depth() - 1).next().unwrap();
    println!("\npath to history {deepest}:");
    for h in tree.path(deepest) {
        println!("  {:>4}  {}", h, tree.encode(&inst, h));
    }

    match GameTree::build(&inst, 100) {
        Err(e) => println!("\nwith a cap of 100: {e}"),
        Ok(_) => unreachable!(),
    }
}
