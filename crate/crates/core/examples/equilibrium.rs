//! Solving for the equilibrium: value, both strategies, and the attacker's beliefs along
//! the most likely play.

use drag::model::canonical_instance;
use drag::pbne::{solve_pbne, PbneOptions};

fn main() {
    let inst = canonical_instance().with_horizon(6).unwrap();
    let sol = solve_pbne(&inst, &PbneOptions { validate: true, ..Default::default() }).unwrap();
    println!("histories {}", sol.tree.len());
    println!("game value {:.6} (attacker program {:.6}, gap {:.1e})", sol.game_value, sol.attacker_value, sol.duality_gap);
    println!("iterations: defender {}, attacker {}", sol.defender_stats.iterations, sol.attacker_stats.iterations);

    // Follow the attacker's most likely move and the true asset's most likely allocation.
    let (tree, theta) = (&sol.tree, 1);
    let mut h = 0;
    while !tree.is_leaf(h) {
        let acts = inst.action_space(tree.state(h));
        let a = argmax(sol.attacker.policy(h));
        let v = argmax(sol.defender.policy(h, theta));
        let b = sol.beliefs.belief(h);
        println!(
            "{:<40} belief [{:.3}, {:.3}]  attacker {:?}  defender allocates {v}",
            tree.encode(&inst, h),
            b[0],
            b[1],
            rounded(sol.attacker.policy(h))
        );
        let edge = acts[a];
        h = tree.successors(&inst, h, edge, v).unwrap()[0].0;
    }
    println!("{}  (leaf)", tree.encode(&inst, h));
}

fn argmax(p: &[f64]) -> usize {
    (0..p.len()).fold(0, |best, i| if p[i] > p[best] { i } else { best })
}

fn rounded(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}
