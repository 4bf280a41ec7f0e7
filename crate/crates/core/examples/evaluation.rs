//! Benchmarks and deviations: full-information values, the value of deception, best
//! responses to baselines, and the deviation table.

use drag::evaluation::{
    attacker_best_response, defender_baseline, deviation_table, exploitability, full_information_value,
    value_of_deception, Baseline,
};
use drag::model::canonical_instance;
use drag::pbne::{solve_pbne, DefenderPlan, PbneOptions};

fn main() {
    let inst = canonical_instance().with_horizon(6).unwrap();
    let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
    let fi = full_information_value(&inst).unwrap();
    println!("game value {:.6}", sol.game_value);
    println!("full information {:?}, mixture {:.6}", fi.per_type, fi.mixture);
    println!("value of deception {:.4}", value_of_deception(sol.game_value, fi.mixture).unwrap());

    let ex = exploitability(&sol.tree, &inst, &sol.attacker_plan, &sol.defender_plan, inst.prior());
    println!("equilibrium exploitability {:.2e}", ex.relative);

    // A truthful defender reveals the asset; the attacker's best response recovers the
    // full-information value.
    let tc = defender_baseline(Baseline::TruthfulDefender, &inst, &sol.tree).unwrap();
    let br = attacker_best_response(&sol.tree, &inst, &DefenderPlan::from_strategy(&sol.tree, &tc, inst.prior()));
    println!("attacker best response to TC-D {:.6}", br.value);

    println!("\n{:<6} {:<7} {:>11}", "def", "att", "value");
    for row in deviation_table(&sol.tree, &inst, (&sol).into()) {
        println!("{:<6} {:<7} {:>11.6} {} V*", row.defender, row.attacker, row.value, row.relation);
        assert!(row.holds);
    }
}
