//! The bundled simplex on a small matrix game, with its dual prices and MPS export.

use drag::lp::{export_lp, solve_lp, LpBuilder, LpFormat, Relation, Sense, SolverOptions};

fn main() {
    // A cyclic three-move game where move 0 beating move 2 pays double.
    let a = [[0.0, -1.0, 2.0], [1.0, 0.0, -1.0], [-2.0, 1.0, 0.0]];
    let mut b = LpBuilder::new(Sense::Maximize);
    let v = b.add_var("v", f64::NEG_INFINITY, f64::INFINITY);
    b.set_objective(v, 1.0);
    let x: Vec<usize> = (0..3).map(|i| b.add_var(format!("x{i}"), 0.0, f64::INFINITY)).collect();
    for (j, _) in a[0].iter().enumerate() {
        let mut row = vec![(v, 1.0)];
        row.extend((0..3).map(|i| (x[i], -a[i][j])));
        b.add_constraint(format!("col{j}"), row, Relation::Le, 0.0);
    }
    b.add_constraint("simplex", x.iter().map(|&i| (i, 1.0)).collect(), Relation::Eq, 1.0);
    let lp = b.seal().unwrap();

    let sol = solve_lp(&lp, &SolverOptions::default()).unwrap();
    println!("status {:?}, value {:.6}", sol.status, sol.objective);
    println!("row player  {:?}", x.iter().map(|&i| format!("{:.4}", sol.primal[i])).collect::<Vec<_>>());
    // The column player's mixture is read off the column constraints' prices.
    let dual = sol.dual.as_ref().unwrap();
    println!("column player {:?}", dual[..3].iter().map(|y| format!("{:.4}", y.abs())).collect::<Vec<_>>());
    println!("iterations {}, duality gap {:.2e}", sol.stats.iterations, sol.duality_gap());

    println!("\n{}", export_lp(&lp, LpFormat::Mps).unwrap());
}
