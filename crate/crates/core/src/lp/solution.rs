use std::collections::HashMap;
use std::fmt::Write;

use super::export::fmt_num;
use super::problem::LpProblem;
use super::{LpError, LpSolution, LpStatus, SolveStats};

/// Plain-text solution: `#` comments, then one `name value` pair per line. Variable names
/// give primal values; row names give shadow prices.
pub fn write_solution(problem: &LpProblem, sol: &LpSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# status {}", status_word(sol.status));
    let _ = writeln!(out, "# objective {}", fmt_num(sol.objective));
    for (v, x) in problem.vars().iter().zip(&sol.primal) {
        let _ = writeln!(out, "{} {}", v.name, fmt_num(*x));
    }
    if let Some(dual) = &sol.dual {
        for (c, y) in problem.constraints().iter().zip(dual) {
            let _ = writeln!(out, "{} {}", c.name, fmt_num(*y));
        }
    }
    out
}

fn status_word(s: LpStatus) -> &'static str {
    match s {
        LpStatus::Optimal => "optimal",
        LpStatus::Infeasible => "infeasible",
        LpStatus::Unbounded => "unbounded",
        LpStatus::IterationLimit => "iteration_limit",
    }
}

/// Parses a solution written by [`write_solution`] or an external solver in the same
/// format. Every variable must be present. Row duals are optional, but if any is given
/// all must be. The point must satisfy the problem within `1e-6` relative to the data.
pub fn import_solution(problem: &LpProblem, text: &str) -> Result<LpSolution, LpError> {
    let mut var_pos: HashMap<&str, usize> = HashMap::with_capacity(problem.num_vars());
    for (j, v) in problem.vars().iter().enumerate() {
        var_pos.insert(v.name.as_str(), j);
    }
    let mut row_pos: HashMap<&str, usize> = HashMap::with_capacity(problem.num_constraints());
    for (i, c) in problem.constraints().iter().enumerate() {
        row_pos.insert(c.name.as_str(), i);
    }
    let mut primal: Vec<Option<f64>> = vec![None; problem.num_vars()];
    let mut dual: Vec<Option<f64>> = vec![None; problem.num_constraints()];
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| LpError::Parse { line: k + 1, message };
        let mut it = line.split_whitespace();
        let name = it.next().unwrap_or_default();
        let value = it
            .next()
            .ok_or_else(|| parse_err(format!("missing value for {name:?}")))?;
        if it.next().is_some() {
            return Err(parse_err("expected exactly two fields".into()));
        }
        let value: f64 = value
            .parse()
            .map_err(|_| parse_err(format!("bad number {value:?}")))?;
        if !value.is_finite() {
            return Err(parse_err(format!("non-finite value for {name:?}")));
        }
        let slot = if let Some(&j) = var_pos.get(name) {
            &mut primal[j]
        } else if let Some(&i) = row_pos.get(name) {
            &mut dual[i]
        } else {
            return Err(parse_err(format!("unknown name {name:?}")));
        };
        if slot.replace(value).is_some() {
            return Err(parse_err(format!("duplicate entry for {name:?}")));
        }
    }
    let primal = primal
        .into_iter()
        .enumerate()
        .map(|(j, x)| x.ok_or_else(|| LpError::MissingVariable(problem.vars()[j].name.clone())))
        .collect::<Result<Vec<f64>, _>>()?;
    let given = dual.iter().filter(|d| d.is_some()).count();
    let dual = if given == 0 {
        None
    } else if given == dual.len() {
        Some(dual.into_iter().map(|d| d.unwrap_or_default()).collect::<Vec<f64>>())
    } else {
        let missing = dual.iter().position(|d| d.is_none()).unwrap_or_default();
        return Err(LpError::MissingVariable(
            problem.constraints()[missing].name.clone(),
        ));
    };
    let residual = problem.primal_residual(&primal);
    let scale = problem
        .constraints()
        .iter()
        .flat_map(|c| c.coeffs.iter().map(|&(_, a)| a.abs()).chain([c.rhs.abs()]))
        .fold(1.0f64, f64::max);
    if residual > 1e-6 * scale {
        return Err(LpError::InfeasiblePoint { residual });
    }
    let objective = problem.objective_value(&primal);
    let dual_objective = match &dual {
        Some(y) => problem
            .constraints()
            .iter()
            .zip(y)
            .map(|(c, yi)| c.rhs * yi)
            .sum(),
        None => objective,
    };
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        dual_objective,
        primal,
        dual,
        reduced_costs: None,
        stats: SolveStats {
            primal_residual: residual,
            ..SolveStats::default()
        },
        ray: None,
    })
}
