mod common;

use drag::evaluation::{ex_ante_value, exploitability, forward_value, rollout, value_of_deception, RolloutOptions};
use drag::lp::{solve_lp, LpBuilder, Relation, Sense, SolverOptions};
use drag::model::{make_grid_instance, History};
use drag::pbne::{belief_update, solve_pbne, PbneOptions};
use drag::tree::{GameTree, DEFAULT_SIZE_CAP};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn equilibria_are_certified(seed in any::<u64>()) {
        let inst = common::random_grid(&mut ChaCha8Rng::seed_from_u64(seed));
        let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
        let scale = 1f64.max(sol.game_value.abs());
        prop_assert!((sol.game_value - sol.attacker_value).abs() <= 1e-6 * scale);

        let (dres, _) = sol.defender_plan.flow_residual(&sol.tree, inst.prior());
        let (ares, _) = sol.attacker_plan.flow_residual(&sol.tree, &inst);
        prop_assert!(dres <= 1e-8 && ares <= 1e-8);

        let ex = exploitability(&sol.tree, &inst, &sol.attacker_plan, &sol.defender_plan, inst.prior());
        prop_assert!(ex.relative <= 1e-6);
        prop_assert!(ex.attacker_br <= sol.game_value + 1e-6 * scale);
        prop_assert!(ex.defender_br >= sol.game_value - 1e-6 * scale);

        let v = ex_ante_value(&sol.tree, &inst, 0, inst.prior(), &sol.attacker, &sol.defender);
        let f = forward_value(&sol.tree, &inst, &sol.attacker, &sol.defender, inst.prior());
        prop_assert!((v - sol.game_value).abs() <= 1e-6 * scale);
        prop_assert!((v - f).abs() <= 1e-9 * scale);

        for h in 0..sol.tree.len() {
            let b = sol.beliefs.belief(h);
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(b.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn one_shot_values_match_oracle(seed in any::<u64>()) {
        let inst = common::random_one_shot(&mut ChaCha8Rng::seed_from_u64(seed));
        let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
        prop_assert!((sol.game_value - common::one_shot_oracle(&inst)).abs() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn tree_histories_round_trip(seed in any::<u64>()) {
        let inst = common::random_grid(&mut ChaCha8Rng::seed_from_u64(seed));
        let tree = GameTree::build(&inst, DEFAULT_SIZE_CAP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        for _ in 0..50 {
            let h = rng.gen_range(0..tree.len());
            let text = tree.encode(&inst, h);
            prop_assert_eq!(tree.decode(&inst, &text).unwrap(), h);
            prop_assert_eq!(History::decode(&text, &inst).unwrap(), tree.history(h));
            prop_assert_eq!(tree.is_leaf(h), inst.is_terminal(&tree.history(h)));
        }
    }

    #[test]
    fn belief_update_is_bayes_rule(
        prior in prop::collection::vec(0.01f64..1.0, 1..5),
        column in prop::collection::vec(0.0f64..1.0, 5),
    ) {
        let s: f64 = prior.iter().sum();
        let prior: Vec<f64> = prior.iter().map(|x| x / s).collect();
        let column = &column[..prior.len()];
        match belief_update(&prior, column, 1e-12) {
            Ok(step) => {
                prop_assert!((step.belief.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                for t in 0..prior.len() {
                    prop_assert!((step.belief[t] * step.xi - prior[t] * column[t]).abs() <= 1e-12);
                }
            }
            Err(xi) => prop_assert!(xi <= 1e-12),
        }
    }

    #[test]
    fn value_of_deception_is_scale_free(v in -50.0f64..0.0, fi in -50.0f64..-0.1, a in 0.1f64..10.0) {
        let base = value_of_deception(v, fi).unwrap();
        prop_assert!((value_of_deception(a * v, a * fi).unwrap() - base).abs() <= 1e-9 * (1.0 + base.abs()));
    }

    /// Both formulations of a random matrix game are solved on their own and must agree.
    #[test]
    fn matrix_game_primal_and_dual_agree(
        rows in 1usize..5,
        cols in 1usize..5,
        entries in prop::collection::vec(-5.0f64..5.0, 16),
    ) {
        let a = |i: usize, j: usize| entries[i * 4 + j];
        let mut maxer = LpBuilder::new(Sense::Maximize);
        let v = maxer.add_var("v", f64::NEG_INFINITY, f64::INFINITY);
        maxer.set_objective(v, 1.0);
        let x: Vec<usize> = (0..rows).map(|i| maxer.add_var(format!("x{i}"), 0.0, f64::INFINITY)).collect();
        for j in 0..cols {
            let mut r = vec![(v, 1.0)];
            r.extend((0..rows).map(|i| (x[i], -a(i, j))));
            maxer.add_constraint(format!("c{j}"), r, Relation::Le, 0.0);
        }
        maxer.add_constraint("sx", x.iter().map(|&i| (i, 1.0)).collect(), Relation::Eq, 1.0);

        let mut miner = LpBuilder::new(Sense::Minimize);
        let w = miner.add_var("w", f64::NEG_INFINITY, f64::INFINITY);
        miner.set_objective(w, 1.0);
        let y: Vec<usize> = (0..cols).map(|j| miner.add_var(format!("y{j}"), 0.0, f64::INFINITY)).collect();
        for i in 0..rows {
            let mut r = vec![(w, 1.0)];
            r.extend((0..cols).map(|j| (y[j], -a(i, j))));
            miner.add_constraint(format!("r{i}"), r, Relation::Ge, 0.0);
        }
        miner.add_constraint("sy", y.iter().map(|&j| (j, 1.0)).collect(), Relation::Eq, 1.0);

        let opts = SolverOptions::default();
        let p = solve_lp(&maxer.seal().unwrap(), &opts).unwrap();
        let d = solve_lp(&miner.seal().unwrap(), &opts).unwrap();
        prop_assert!(p.is_optimal() && d.is_optimal());
        prop_assert!((p.objective - d.objective).abs() <= 1e-9);
    }
}

#[test]
fn rollouts_do_not_depend_on_thread_count() {
    let inst = make_grid_instance(3, 3, &[(1, 1)], &[(0, 2), (2, 2)], (0, 0), vec![0.4, 0.6], 4, 10.0).unwrap();
    let sol = solve_pbne(&inst, &PbneOptions::default()).unwrap();
    let opts = RolloutOptions { episodes: 3000, seed: 42, keep_log: true };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let single = pool.install(|| rollout(&sol.tree, &inst, &sol.attacker, &sol.defender, &opts));
    let default = rollout(&sol.tree, &inst, &sol.attacker, &sol.defender, &opts);
    assert_eq!(single.0.mean.to_bits(), default.0.mean.to_bits());
    assert_eq!(single.1, default.1);
}
