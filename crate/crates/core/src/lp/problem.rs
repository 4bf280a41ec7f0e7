use std::collections::HashSet;

use super::LpError;

/// Optimization direction of an [`LpProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

/// Relation between a constraint row and its right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse row, sorted by column index with no duplicates once sealed.
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Mutable builder; call [`LpBuilder::seal`] to obtain an immutable, validated [`LpProblem`].
#[derive(Debug, Clone)]
pub struct LpBuilder {
    sense: Sense,
    vars: Vec<Variable>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LpBuilder {
    pub fn new(sense: Sense) -> Self {
        LpBuilder {
            sense,
            vars: Vec::new(),
            objective: Vec::new(),
            constraints: Vec::new(),
        }
    }

    pub fn with_capacity(sense: Sense, vars: usize, rows: usize) -> Self {
        LpBuilder {
            sense,
            vars: Vec::with_capacity(vars),
            objective: Vec::with_capacity(vars),
            constraints: Vec::with_capacity(rows),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.vars.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(0.0);
        self.vars.len() - 1
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Validates indices, bounds and right-hand sides, sorts every row, and rejects
    /// duplicate `(row, column)` entries. Explicit zeros are dropped.
    pub fn seal(mut self) -> Result<LpProblem, LpError> {
        let n = self.vars.len();
        for (j, v) in self.vars.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(LpError::InvalidBounds {
                    var: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(LpError::InvalidBounds {
                    var: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if !self.objective[j].is_finite() {
                return Err(LpError::NonFinite(format!("objective coefficient of {}", v.name)));
            }
        }
        for row in &mut self.constraints {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of {}", row.name)));
            }
            row.coeffs.retain(|&(_, a)| a != 0.0);
            row.coeffs.sort_by_key(|&(j, _)| j);
            for w in row.coeffs.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(LpError::DuplicateEntry {
                        row: row.name.clone(),
                        col: w[0].0,
                    });
                }
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::IndexOutOfRange {
                        row: row.name.clone(),
                        col: j,
                    });
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!("coefficient in {}", row.name)));
                }
            }
        }
        Ok(LpProblem {
            sense: self.sense,
            vars: self.vars,
            objective: self.objective,
            constraints: self.constraints,
            basis_hint: None,
        })
    }
}

/// A sealed linear program. Immutable; shareable across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    sense: Sense,
    vars: Vec<Variable>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    basis_hint: Option<Vec<(usize, usize)>>,
}

impl LpProblem {
    /// Suggests a starting basis: each `(column, row)` pair makes the column basic in place
    /// of that row's logical. The solver uses it only if it is nonsingular and primal
    /// feasible, so a bad hint costs time but never correctness.
    pub fn with_basis_hint(mut self, pairs: Vec<(usize, usize)>) -> Self {
        self.basis_hint = Some(pairs);
        self
    }

    pub fn basis_hint(&self) -> Option<&[(usize, usize)]> {
        self.basis_hint.as_deref()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn nnz(&self) -> usize {
        self.constraints.iter().map(|c| c.coeffs.len()).sum()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Returns a copy with every objective coefficient multiplied by `factor`.
    pub fn scaled_objective(&self, factor: f64) -> LpProblem {
        let mut p = self.clone();
        for c in &mut p.objective {
            *c *= factor;
        }
        p
    }

    /// Largest violation of any row or variable bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &xv) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
        }
        for row in &self.constraints {
            let act: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let viol = match row.relation {
                Relation::Le => act - row.rhs,
                Relation::Ge => row.rhs - act,
                Relation::Eq => (act - row.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// Names must be nonempty, at most 255 bytes, free of whitespace, and unique across
    /// both variables and rows.
    pub fn check_names(&self) -> Result<(), LpError> {
        let mut seen = HashSet::with_capacity(self.vars.len() + self.constraints.len());
        let names = self
            .vars
            .iter()
            .map(|v| v.name.as_str())
            .chain(self.constraints.iter().map(|c| c.name.as_str()));
        for name in names {
            if name.is_empty()
                || name.len() > 255
                || name.chars().any(|c| c.is_whitespace() || c == ':')
            {
                return Err(LpError::InvalidName(name.to_string()));
            }
            if !seen.insert(name) {
                return Err(LpError::NameCollision(name.to_string()));
            }
        }
        Ok(())
    }
}
