use std::fmt::Write;

use super::problem::{LpProblem, Relation, Sense};
use super::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpFormat {
    /// MPS with the classic column layout. Names longer than eight characters widen the
    /// fields, so long-named problems must be read in free-MPS mode.
    Mps,
    /// CPLEX-style LP text.
    LpText,
}

impl std::str::FromStr for LpFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mps" => Ok(LpFormat::Mps),
            "lp" | "lp-text" => Ok(LpFormat::LpText),
            other => Err(format!("unknown LP format {other:?} (expected mps or lp)")),
        }
    }
}

impl LpFormat {
    pub fn extension(self) -> &'static str {
        match self {
            LpFormat::Mps => "mps",
            LpFormat::LpText => "lp",
        }
    }
}

/// Shortest decimal that round-trips to the same `f64`.
pub(crate) fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

/// Serializes `problem`. Output is byte-stable for identical input.
pub fn export_lp(problem: &LpProblem, format: LpFormat) -> Result<String, LpError> {
    problem.check_names()?;
    match format {
        LpFormat::Mps => Ok(write_mps(problem)),
        LpFormat::LpText => {
            for name in problem
                .vars()
                .iter()
                .map(|v| &v.name)
                .chain(problem.constraints().iter().map(|c| &c.name))
            {
                let mut chars = name.chars();
                let first = chars.next().unwrap_or('0');
                // `e` followed by a digit or another `e` reads as an exponent.
                let exponent_like =
                    matches!(first, 'e' | 'E') && chars.next().is_some_and(|c| c.is_ascii_digit() || matches!(c, 'e' | 'E'));
                if first.is_ascii_digit() || first == '.' || exponent_like
                    || name.chars().any(|c| "+-*/<>=[]^\\".contains(c))
                {
                    return Err(LpError::InvalidName(name.clone()));
                }
            }
            Ok(write_lp_text(problem))
        }
    }
}

const OBJ_ROW: &str = "obj";

fn write_mps(p: &LpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          drag");
    if p.sense() == Sense::Maximize {
        let _ = writeln!(out, "OBJSENSE");
        let _ = writeln!(out, "    MAX");
    }
    let _ = writeln!(out, "ROWS");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in p.constraints() {
        let t = match c.relation {
            Relation::Le => 'L',
            Relation::Eq => 'E',
            Relation::Ge => 'G',
        };
        let _ = writeln!(out, " {t}  {}", c.name);
    }
    // Column-major entries.
    let n = p.num_vars();
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, c) in p.constraints().iter().enumerate() {
        for &(j, a) in &c.coeffs {
            by_col[j].push((i, a));
        }
    }
    let _ = writeln!(out, "COLUMNS");
    for (j, v) in p.vars().iter().enumerate() {
        let mut entries: Vec<(&str, f64)> = Vec::new();
        let c = p.objective()[j];
        if c != 0.0 {
            entries.push((OBJ_ROW, c));
        }
        for &(i, a) in &by_col[j] {
            entries.push((p.constraints()[i].name.as_str(), a));
        }
        if entries.is_empty() {
            entries.push((OBJ_ROW, 0.0));
        }
        for pair in entries.chunks(2) {
            let mut line = format!("    {:<8}  {:<8}  {:>12}", v.name, pair[0].0, fmt_num(pair[0].1));
            if let Some(second) = pair.get(1) {
                let _ = write!(line, "   {:<8}  {:>12}", second.0, fmt_num(second.1));
            }
            let _ = writeln!(out, "{line}");
        }
    }
    let _ = writeln!(out, "RHS");
    for c in p.constraints() {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    {:<8}  {:<8}  {:>12}", "RHS", c.name, fmt_num(c.rhs));
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for v in p.vars() {
        let (l, u) = (v.lower, v.upper);
        let mut bound = |kind: &str, val: Option<f64>| {
            let _ = match val {
                Some(x) => writeln!(out, " {kind} {:<8}  {:<8}  {:>12}", "BND", v.name, fmt_num(x)),
                None => writeln!(out, " {kind} {:<8}  {}", "BND", v.name),
            };
        };
        if l == u {
            bound("FX", Some(l));
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            bound("FR", None);
        } else {
            if l == f64::NEG_INFINITY {
                bound("MI", None);
            } else if l != 0.0 || u < 0.0 {
                bound("LO", Some(l));
            }
            if u != f64::INFINITY {
                bound("UP", Some(u));
            }
        }
    }
    let _ = writeln!(out, "ENDATA");
    out
}

fn write_lp_text(p: &LpProblem) -> String {
    const WRAP: usize = 100;
    let mut out = String::new();
    let _ = writeln!(out, "\\ drag linear program");
    let _ = writeln!(
        out,
        "{}",
        match p.sense() {
            Sense::Maximize => "Maximize",
            Sense::Minimize => "Minimize",
        }
    );
    let first_var = p.vars().first().map(|v| v.name.as_str());
    let emit_terms = |out: &mut String, head: String, terms: Vec<(f64, &str)>, tail: &str| {
        let mut line = head;
        let mut terms = terms;
        if terms.is_empty() {
            if let Some(v) = first_var {
                terms.push((0.0, v));
            }
        }
        for (a, name) in terms {
            let sign = if a < 0.0 { '-' } else { '+' };
            let mag = a.abs();
            let piece = if mag == 1.0 {
                format!(" {sign} {name}")
            } else {
                format!(" {sign} {} {name}", fmt_num(mag))
            };
            if line.len() + piece.len() > WRAP {
                let _ = writeln!(out, "{line}");
                line = String::from("  ");
            }
            line.push_str(&piece);
        }
        line.push_str(tail);
        let _ = writeln!(out, "{line}");
    };
    let obj_terms: Vec<(f64, &str)> = p
        .objective()
        .iter()
        .zip(p.vars())
        .filter(|(c, _)| **c != 0.0)
        .map(|(c, v)| (*c, v.name.as_str()))
        .collect();
    emit_terms(&mut out, format!(" {OBJ_ROW}:"), obj_terms, "");
    let _ = writeln!(out, "Subject To");
    for c in p.constraints() {
        let terms = c
            .coeffs
            .iter()
            .map(|&(j, a)| (a, p.vars()[j].name.as_str()))
            .collect();
        let rel = match c.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let rhs = if c.rhs < 0.0 {
            format!("-{}", fmt_num(-c.rhs))
        } else {
            fmt_num(c.rhs)
        };
        emit_terms(&mut out, format!(" {}:", c.name), terms, &format!(" {rel} {rhs}"));
    }
    let _ = writeln!(out, "Bounds");
    for v in p.vars() {
        let (l, u) = (v.lower, v.upper);
        let signed = |x: f64| if x < 0.0 { format!("-{}", fmt_num(-x)) } else { fmt_num(x) };
        if l == u {
            let _ = writeln!(out, " {} = {}", v.name, signed(l));
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else if l == 0.0 && u == f64::INFINITY {
            continue;
        } else {
            let lo = if l == f64::NEG_INFINITY { "-inf".to_string() } else { signed(l) };
            let hi = if u == f64::INFINITY { "+inf".to_string() } else { signed(u) };
            let _ = writeln!(out, " {lo} <= {} <= {hi}", v.name);
        }
    }
    let _ = writeln!(out, "End");
    out
}
