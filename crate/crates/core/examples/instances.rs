//! Building instances: a grid from its layout, an explicit graph with a slippery edge,
//! the JSON form, and history strings.

use drag::model::{canonical_instance, parse_instance, write_instance, DragInstance, Edge, Graph, History, RewardMode};

fn main() {
    let grid = canonical_instance();
    let layout = grid.layout().expect("grid instance");
    println!("canonical grid: {} free cells, {} directed edges", layout.cells.len(), grid.graph().edges().len());
    for (k, &a) in grid.assets().iter().enumerate() {
        println!("  asset {k} at cell {:?}, prior {}", layout.cells[a], grid.prior()[k]);
    }

    // Moving along 0 -> 1 slips back with probability 0.1.
    let graph = Graph::new(
        3,
        vec![
            Edge { from: 0, to: 1, weight: 1.0, transition: vec![(1, 0.9), (0, 0.1)] },
            Edge { from: 0, to: 2, weight: 2.0, transition: vec![(2, 1.0)] },
        ],
    )
    .unwrap();
    let inst = DragInstance::new(graph, vec![1, 2], vec![0.5, 0.5], 0, 3, 10.0, RewardMode::Standard).unwrap();
    let text = write_instance(&inst);
    println!("\nexplicit instance as JSON:\n{text}");
    assert_eq!(parse_instance(&text).unwrap(), inst);

    let g = inst.graph();
    let h = History::root(0).extend(g.find_edge(0, 1).unwrap(), 1, 0).extend(g.find_edge(0, 2).unwrap(), 1, 2);
    let code = h.encode(g);
    println!("history {code} is terminal: {}", inst.is_terminal(&h));
    println!("reward matrix at the root for asset 1: {:?}", inst.reward_matrix(&History::root(0), 1));
    assert_eq!(History::decode(&code, &inst).unwrap(), h);
}
