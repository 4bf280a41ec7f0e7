//! Seeded Monte-Carlo play of the equilibrium, compared with the exact value, plus one
//! trajectory drawn as SVG.

use drag::evaluation::{ex_ante_value, rollout, trajectory_svg, RolloutOptions};
use drag::model::canonical_instance;
use drag::pbne::{solve_pbne, PbneOptions};

fn main() {
    let inst = canonical_instance().with_horizon(6).unwrap();
    let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
    let exact = ex_ante_value(&sol.tree, &inst, 0, inst.prior(), &sol.attacker, &sol.defender);
    for episodes in [100, 10_000, 100_000] {
        let opts = RolloutOptions { episodes, seed: 7, keep_log: false };
        let (stats, _) = rollout(&sol.tree, &inst, &sol.attacker, &sol.defender, &opts);
        let z = (stats.mean - exact) / stats.stderr.max(f64::MIN_POSITIVE);
        println!("{episodes:>7} episodes: mean {:.4} ± {:.4}  (exact {:.4}, z {:+.2})", stats.mean, stats.stderr, exact, z);
    }

    let opts = RolloutOptions { episodes: 1, seed: 7, keep_log: true };
    let (_, log) = rollout(&sol.tree, &inst, &sol.attacker, &sol.defender, &opts);
    let rec = &log.unwrap()[0];
    println!("\nepisode 0: asset {}, reward {}, history {}", rec.theta, rec.reward, rec.history);
    let path = std::env::temp_dir().join("drag_episode.svg");
    std::fs::write(&path, trajectory_svg(&inst, rec).unwrap()).unwrap();
    println!("trajectory written to {}", path.display());
}
