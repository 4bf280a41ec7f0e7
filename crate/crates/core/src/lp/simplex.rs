//! Bounded-variable revised primal simplex.
//!
//! Internally every problem is a minimization in the computational form
//! `A x + s = b` with one logical `s_i` per row (`s_i >= 0` for `<=`, `s_i <= 0` for
//! `>=`, `s_i = 0` for `=`). Rows whose logical cannot absorb the initial residual get
//! an artificial column; phase one drives the artificials to zero.

use super::lu::BasisFactor;
use super::problem::{LpProblem, Relation, Sense};
use super::{LpError, LpSolution, LpStatus, PivotRule, SolveStats, SolverOptions};

const PIVOT_TOL: f64 = 1e-7;
const PIVOT_CHECK: f64 = 1e-8;
const DEGENERATE_STEP: f64 = 1e-12;
/// Degenerate pivots in a row before falling back to Bland's rule. Devex rarely stalls
/// this long; the fallback exists for its termination guarantee.
const BLAND_AFTER: usize = 20_000;
const DEVEX_RESET: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
    Free,
    Fixed,
}

enum Ratio {
    Leave { pos: usize, to_upper: bool, step: f64 },
    Flip { step: f64 },
    Unbounded,
}

enum PhaseEnd {
    Optimal,
    Unbounded(Vec<f64>),
    IterationLimit,
}

struct Simplex<'a> {
    opts: &'a SolverOptions,
    m: usize,
    n: usize,
    rhs: Vec<f64>,
    // structural columns, CSC and CSR
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    row_start: Vec<usize>,
    row_col: Vec<usize>,
    row_val: Vec<f64>,
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    phase2_cost: Vec<f64>,
    x: Vec<f64>,
    d: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    basis_pos: Vec<usize>,
    factor: BasisFactor,
    work: Vec<f64>,
    alpha: Vec<f64>,
    rho: Vec<f64>,
    prow: Vec<f64>,
    prow_touched: Vec<usize>,
    prow_mark: Vec<bool>,
    weights: Vec<f64>,
    dual_tol: f64,
    stats: SolveStats,
    degenerate_run: usize,
    bland_active: bool,
    fresh: bool,
}

impl<'a> Simplex<'a> {
    fn new(p: &LpProblem, opts: &'a SolverOptions) -> Self {
        let m = p.num_constraints();
        let n = p.num_vars();
        let sign = match p.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut row_start = Vec::with_capacity(m + 1);
        let mut row_col = Vec::with_capacity(p.nnz());
        let mut row_val = Vec::with_capacity(p.nnz());
        row_start.push(0);
        for c in p.constraints() {
            for &(j, a) in &c.coeffs {
                row_col.push(j);
                row_val.push(a);
            }
            row_start.push(row_col.len());
        }
        let mut counts = vec![0usize; n + 1];
        for &j in &row_col {
            counts[j + 1] += 1;
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let mut col_row = vec![0; row_col.len()];
        let mut col_val = vec![0.0; row_col.len()];
        for i in 0..m {
            for k in row_start[i]..row_start[i + 1] {
                let j = row_col[k];
                col_row[fill[j]] = i;
                col_val[fill[j]] = row_val[k];
                fill[j] += 1;
            }
        }

        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for (v, &c) in p.vars().iter().zip(p.objective()) {
            lower.push(v.lower);
            upper.push(v.upper);
            cost.push(sign * c);
        }
        for c in p.constraints() {
            let (l, u) = match c.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
            cost.push(0.0);
        }
        let rhs = p.constraints().iter().map(|c| c.rhs).collect();
        Simplex {
            opts,
            m,
            n,
            rhs,
            col_start,
            col_row,
            col_val,
            row_start,
            row_col,
            row_val,
            art_row: Vec::new(),
            art_sign: Vec::new(),
            lower,
            upper,
            phase2_cost: cost,
            cost: Vec::new(),
            x: Vec::new(),
            d: Vec::new(),
            status: Vec::new(),
            basis: Vec::new(),
            basis_pos: Vec::new(),
            factor: BasisFactor::default(),
            work: vec![0.0; m],
            alpha: vec![0.0; m],
            rho: vec![0.0; m],
            prow: Vec::new(),
            prow_touched: Vec::new(),
            prow_mark: Vec::new(),
            weights: Vec::new(),
            dual_tol: opts.feas_tol,
            stats: SolveStats {
                pivot_rule: opts.pivot_rule,
                ..Default::default()
            },
            degenerate_run: 0,
            bland_active: opts.pivot_rule == PivotRule::Bland,
            fresh: false,
        }
    }

    fn ncols(&self) -> usize {
        self.n + self.m + self.art_row.len()
    }

    fn for_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for k in self.col_start[j]..self.col_start[j + 1] {
                f(self.col_row[k], self.col_val[k]);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            let a = j - self.n - self.m;
            f(self.art_row[a], self.art_sign[a]);
        }
    }

    fn column_vec(&self, j: usize) -> Vec<(usize, f64)> {
        let mut v = Vec::new();
        self.for_column(j, |i, a| v.push((i, a)));
        v
    }

    /// Installs the problem's basis hint. Returns false, leaving no state behind that
    /// `initial_basis` does not overwrite, when the hint is absent, malformed, singular or
    /// infeasible.
    fn try_hint(&mut self, p: &LpProblem) -> bool {
        let Some(hint) = p.basis_hint() else {
            return false;
        };
        let (n, m) = (self.n, self.m);
        let mut row_taken = vec![false; m];
        let mut col_taken = vec![false; n];
        for &(j, i) in hint {
            if j >= n || i >= m || row_taken[i] || col_taken[j] {
                return false;
            }
            row_taken[i] = true;
            col_taken[j] = true;
        }
        self.x = vec![0.0; n + m];
        self.status = vec![Status::AtLower; n + m];
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            let (val, st) = if col_taken[j] {
                (0.0, Status::Basic)
            } else if l == u {
                (l, Status::Fixed)
            } else if l.is_finite() {
                (l, Status::AtLower)
            } else if u.is_finite() {
                (u, Status::AtUpper)
            } else {
                (0.0, Status::Free)
            };
            self.x[j] = val;
            self.status[j] = st;
        }
        self.basis = hint.iter().map(|&(j, _)| j).collect();
        for i in 0..m {
            let s = n + i;
            if row_taken[i] {
                self.status[s] = if self.lower[s] == self.upper[s] {
                    Status::Fixed
                } else if self.lower[s] == 0.0 {
                    Status::AtLower
                } else {
                    Status::AtUpper
                };
            } else {
                self.status[s] = Status::Basic;
                self.basis.push(s);
            }
        }
        let nc = self.ncols();
        self.basis_pos = vec![usize::MAX; nc];
        for (pos, &j) in self.basis.iter().enumerate() {
            self.basis_pos[j] = pos;
        }
        let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column_vec(j)).collect();
        let Ok(factor) = BasisFactor::factorize(m, &cols) else {
            return false;
        };
        self.factor = factor;
        self.recompute_primal();
        let tol = self.opts.feas_tol * self.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        let feasible = self
            .basis
            .iter()
            .all(|&j| self.x[j] >= self.lower[j] - tol && self.x[j] <= self.upper[j] + tol);
        if !feasible {
            return false;
        }
        for &j in &self.basis {
            self.x[j] = self.x[j].clamp(self.lower[j], self.upper[j]);
        }
        self.d = vec![0.0; nc];
        self.prow = vec![0.0; nc];
        self.prow_mark = vec![false; nc];
        true
    }

    /// Nonbasic structurals start at a finite bound (or zero when free); rows whose
    /// logical cannot hold the residual receive an artificial.
    fn initial_basis(&mut self) {
        let (n, m) = (self.n, self.m);
        self.x = vec![0.0; n + m];
        self.status = vec![Status::AtLower; n + m];
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            let (val, st) = if l == u {
                (l, Status::Fixed)
            } else if l.is_finite() {
                (l, Status::AtLower)
            } else if u.is_finite() {
                (u, Status::AtUpper)
            } else {
                (0.0, Status::Free)
            };
            self.x[j] = val;
            self.status[j] = st;
        }
        let mut resid = self.rhs.clone();
        for j in 0..n {
            let xj = self.x[j];
            if xj != 0.0 {
                for k in self.col_start[j]..self.col_start[j + 1] {
                    resid[self.col_row[k]] -= self.col_val[k] * xj;
                }
            }
        }
        self.basis = Vec::with_capacity(m);
        for (i, &r) in resid.iter().enumerate() {
            let s = n + i;
            let (l, u) = (self.lower[s], self.upper[s]);
            let tol = self.opts.feas_tol;
            if r >= l - tol && r <= u + tol {
                self.x[s] = r.clamp(l, u);
                self.status[s] = Status::Basic;
                self.basis.push(s);
            } else {
                self.x[s] = 0.0;
                self.status[s] = if l == u {
                    Status::Fixed
                } else if l == 0.0 {
                    Status::AtLower
                } else {
                    Status::AtUpper
                };
                let a = self.art_row.len();
                self.art_row.push(i);
                self.art_sign.push(r.signum());
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.phase2_cost.push(0.0);
                self.x.push(r.abs());
                self.status.push(Status::Basic);
                self.basis.push(n + m + a);
            }
        }
        let nc = self.ncols();
        self.basis_pos = vec![usize::MAX; nc];
        for (p, &j) in self.basis.iter().enumerate() {
            self.basis_pos[j] = p;
        }
        self.d = vec![0.0; nc];
        self.prow = vec![0.0; nc];
        self.prow_mark = vec![false; nc];
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column_vec(j)).collect();
        self.factor = match BasisFactor::factorize(self.m, &cols) {
            Ok(f) => f,
            Err(s) => {
                self.repair(&s.pivoted_cols, &s.pivoted_rows);
                let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column_vec(j)).collect();
                BasisFactor::factorize(self.m, &cols).map_err(|s| {
                    LpError::Numerical(format!(
                        "singular basis (rank {} of {}) after {} iterations",
                        s.rank, self.m, self.stats.iterations
                    ))
                })?
            }
        };
        self.stats.refactorizations += 1;
        self.recompute_primal();
        self.recompute_duals();
        self.fresh = true;
        Ok(())
    }

    /// Replaces basic columns that could not be pivoted with the logicals of the rows
    /// left uncovered. The evicted columns become nonbasic at their nearest bound.
    fn repair(&mut self, pivoted_cols: &[usize], pivoted_rows: &[usize]) {
        let m = self.m;
        let mut col_ok = vec![false; m];
        let mut row_ok = vec![false; m];
        pivoted_cols.iter().for_each(|&p| col_ok[p] = true);
        pivoted_rows.iter().for_each(|&i| row_ok[i] = true);
        let rows = (0..m).filter(|&i| !row_ok[i]);
        let positions: Vec<usize> = (0..m).filter(|&p| !col_ok[p]).collect();
        for (p, i) in positions.into_iter().zip(rows) {
            let j = self.basis[p];
            let (l, u, x) = (self.lower[j], self.upper[j], self.x[j]);
            let (val, st) = if l == u {
                (l, Status::Fixed)
            } else if l.is_finite() && (u == f64::INFINITY || x - l <= u - x) {
                (l, Status::AtLower)
            } else if u.is_finite() {
                (u, Status::AtUpper)
            } else {
                (x, Status::Free)
            };
            self.x[j] = val;
            self.status[j] = st;
            self.basis_pos[j] = usize::MAX;
            let s = self.n + i;
            self.basis[p] = s;
            self.basis_pos[s] = p;
            self.status[s] = Status::Basic;
            self.stats.basis_repairs += 1;
        }
    }

    fn recompute_primal(&mut self) {
        let mut r = self.rhs.clone();
        for j in 0..self.ncols() {
            if self.status[j] != Status::Basic {
                let xj = self.x[j];
                if xj != 0.0 {
                    self.for_column(j, |i, a| r[i] -= a * xj);
                }
            }
        }
        self.factor.ftran(&mut r, &mut self.work);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = r[p];
        }
    }

    fn recompute_duals(&mut self) {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.factor.btran(&mut y, &mut self.work);
        for j in 0..self.ncols() {
            if self.status[j] == Status::Basic {
                self.d[j] = 0.0;
            } else {
                let mut dj = self.cost[j];
                self.for_column(j, |i, a| dj -= a * y[i]);
                self.d[j] = dj;
            }
        }
    }

    fn duals(&mut self) -> Vec<f64> {
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        self.factor.btran(&mut y, &mut self.work);
        y
    }

    fn set_cost(&mut self, cost: Vec<f64>) {
        self.weights = vec![1.0; self.ncols()];
        let scale = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        self.dual_tol = self.opts.feas_tol * if scale > 0.0 { scale } else { 1.0 };
        self.cost = cost;
    }

    fn eligible(&self, j: usize) -> Option<f64> {
        let dj = self.d[j];
        match self.status[j] {
            Status::AtLower if dj < -self.dual_tol => Some(1.0),
            Status::AtUpper if dj > self.dual_tol => Some(-1.0),
            Status::Free if dj.abs() > self.dual_tol => Some(-dj.signum()),
            _ => None,
        }
    }

    fn price(&self) -> Option<(usize, f64)> {
        let nc = self.ncols();
        if self.bland_active {
            return (0..nc).find_map(|j| self.eligible(j).map(|dir| (j, dir)));
        }
        let mut best: Option<(usize, f64)> = None;
        let mut best_mag = 0.0;
        for j in 0..nc {
            if let Some(dir) = self.eligible(j) {
                let mag = self.d[j] * self.d[j] / self.weights[j];
                if mag > best_mag {
                    best_mag = mag;
                    best = Some((j, dir));
                }
            }
        }
        best
    }

    fn ratio_test(&self, q: usize, dir: f64) -> Ratio {
        let tol = self.opts.feas_tol;
        let flip = self.upper[q] - self.lower[q];
        let mut candidates: Vec<(usize, f64, f64, bool)> = Vec::new();
        let mut harris = f64::INFINITY;
        for p in 0..self.m {
            let a = self.alpha[p];
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let j = self.basis[p];
            let delta = -dir * a;
            let (slack, to_upper) = if delta < 0.0 {
                if self.lower[j] == f64::NEG_INFINITY {
                    continue;
                }
                ((self.x[j] - self.lower[j]).max(0.0), false)
            } else {
                if self.upper[j] == f64::INFINITY {
                    continue;
                }
                ((self.upper[j] - self.x[j]).max(0.0), true)
            };
            let ratio = slack / delta.abs();
            harris = harris.min((slack + tol) / delta.abs());
            candidates.push((p, ratio, delta.abs(), to_upper));
        }
        let chosen = if self.bland_active {
            let tmin = candidates.iter().fold(f64::INFINITY, |a, c| a.min(c.1));
            candidates
                .iter()
                .filter(|c| c.1 <= tmin + DEGENERATE_STEP)
                .min_by_key(|c| self.basis[c.0])
                .copied()
        } else {
            let mut best: Option<(usize, f64, f64, bool)> = None;
            for c in candidates.iter().filter(|c| c.1 <= harris) {
                let better = match best {
                    None => true,
                    Some(b) => c.2 > b.2 || (c.2 == b.2 && self.basis[c.0] < self.basis[b.0]),
                };
                if better {
                    best = Some(*c);
                }
            }
            best
        };
        match chosen {
            Some((p, ratio, _, to_upper)) => {
                if flip.is_finite() && flip <= ratio {
                    Ratio::Flip { step: flip }
                } else {
                    Ratio::Leave {
                        pos: p,
                        to_upper,
                        step: ratio,
                    }
                }
            }
            None if flip.is_finite() => Ratio::Flip { step: flip },
            None => Ratio::Unbounded,
        }
    }

    fn load_alpha(&mut self, q: usize) {
        self.alpha.iter_mut().for_each(|v| *v = 0.0);
        let mut col = std::mem::take(&mut self.alpha);
        self.for_column(q, |i, a| col[i] = a);
        self.factor.ftran(&mut col, &mut self.work);
        self.alpha = col;
    }

    /// Row `pos` of `B^{-1} A` restricted to nonbasic columns, stored sparsely in `prow`.
    fn load_pivot_row(&mut self, pos: usize) {
        for &j in &self.prow_touched {
            self.prow[j] = 0.0;
            self.prow_mark[j] = false;
        }
        self.prow_touched.clear();
        self.rho.iter_mut().for_each(|v| *v = 0.0);
        self.rho[pos] = 1.0;
        self.factor.btran(&mut self.rho, &mut self.work);
        let (n, m) = (self.n, self.m);
        for i in 0..m {
            let r = self.rho[i];
            if r.abs() <= 1e-14 {
                continue;
            }
            for k in self.row_start[i]..self.row_start[i + 1] {
                let j = self.row_col[k];
                if self.status[j] == Status::Basic {
                    continue;
                }
                if !self.prow_mark[j] {
                    self.prow_mark[j] = true;
                    self.prow_touched.push(j);
                }
                self.prow[j] += r * self.row_val[k];
            }
            let s = n + i;
            if self.status[s] != Status::Basic {
                if !self.prow_mark[s] {
                    self.prow_mark[s] = true;
                    self.prow_touched.push(s);
                }
                self.prow[s] += r;
            }
        }
        for (a, (&row, &sign)) in self.art_row.iter().zip(&self.art_sign).enumerate() {
            let j = n + m + a;
            let r = self.rho[row];
            if self.status[j] != Status::Basic && r != 0.0 {
                if !self.prow_mark[j] {
                    self.prow_mark[j] = true;
                    self.prow_touched.push(j);
                }
                self.prow[j] += sign * r;
            }
        }
    }

    fn run_phase(&mut self) -> Result<PhaseEnd, LpError> {
        loop {
            if self.stats.iterations >= self.opts.iter_cap {
                return Ok(PhaseEnd::IterationLimit);
            }
            if self.factor.num_etas() >= self.opts.refactor_interval
                || self.factor.eta_nnz() > 4 * self.factor.lu_nnz() + 10 * self.m
            {
                self.refactor()?;
            }
            let (q, dir) = match self.price() {
                Some(e) => e,
                None => {
                    if self.fresh {
                        return Ok(PhaseEnd::Optimal);
                    }
                    self.refactor()?;
                    continue;
                }
            };
            self.load_alpha(q);
            match self.ratio_test(q, dir) {
                Ratio::Unbounded => {
                    if !self.fresh {
                        self.refactor()?;
                        continue;
                    }
                    let mut ray = vec![0.0; self.ncols()];
                    ray[q] = dir;
                    for p in 0..self.m {
                        ray[self.basis[p]] = -dir * self.alpha[p];
                    }
                    return Ok(PhaseEnd::Unbounded(ray));
                }
                Ratio::Flip { step } => {
                    self.move_along(q, dir, step);
                    self.status[q] = if dir > 0.0 {
                        Status::AtUpper
                    } else {
                        Status::AtLower
                    };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                    self.after_step(step);
                }
                Ratio::Leave {
                    pos,
                    to_upper,
                    step,
                } => {
                    let aq = self.alpha[pos];
                    self.load_pivot_row(pos);
                    // The pivot seen from the row side must agree with the column side;
                    // disagreement means the eta file has drifted.
                    if !self.fresh && (self.prow[q] - aq).abs() > PIVOT_CHECK * aq.abs().max(1.0) {
                        self.refactor()?;
                        continue;
                    }
                    self.move_along(q, dir, step);
                    let leaving = self.basis[pos];
                    let theta_d = self.d[q] / aq;
                    for &j in &self.prow_touched {
                        self.d[j] -= theta_d * self.prow[j];
                    }
                    self.update_weights(q, leaving, aq);
                    self.d[q] = 0.0;
                    self.d[leaving] = -theta_d;
                    self.status[leaving] = if self.lower[leaving] == self.upper[leaving] {
                        Status::Fixed
                    } else if to_upper {
                        Status::AtUpper
                    } else {
                        Status::AtLower
                    };
                    self.x[leaving] = if to_upper {
                        self.upper[leaving]
                    } else {
                        self.lower[leaving]
                    };
                    self.status[q] = Status::Basic;
                    self.basis[pos] = q;
                    self.basis_pos[q] = pos;
                    self.basis_pos[leaving] = usize::MAX;
                    self.factor.push_eta(pos, &self.alpha);
                    self.after_step(step);
                }
            }
        }
    }

    /// Devex reference weights, updated from the pivot row.
    fn update_weights(&mut self, q: usize, leaving: usize, aq: f64) {
        let wq = self.weights[q];
        if wq > DEVEX_RESET {
            self.weights.iter_mut().for_each(|w| *w = 1.0);
            return;
        }
        for &j in &self.prow_touched {
            let r = self.prow[j] / aq;
            let w = r * r * wq;
            if w > self.weights[j] {
                self.weights[j] = w;
            }
        }
        self.weights[leaving] = (wq / (aq * aq)).max(1.0);
    }

    fn move_along(&mut self, q: usize, dir: f64, step: f64) {
        if step != 0.0 {
            for p in 0..self.m {
                let a = self.alpha[p];
                if a != 0.0 {
                    self.x[self.basis[p]] -= dir * step * a;
                }
            }
            self.x[q] += dir * step;
        }
    }

    fn after_step(&mut self, step: f64) {
        self.stats.iterations += 1;
        self.fresh = false;
        if self.opts.pivot_rule == PivotRule::DevexBland {
            if step <= DEGENERATE_STEP {
                self.degenerate_run += 1;
                if self.degenerate_run >= BLAND_AFTER && !self.bland_active {
                    self.bland_active = true;
                    self.stats.bland_switches += 1;
                }
            } else {
                self.degenerate_run = 0;
                self.bland_active = false;
            }
        }
    }

    fn solve(mut self, p: &LpProblem) -> Result<LpSolution, LpError> {
        if !self.try_hint(p) {
            self.initial_basis();
        }
        let nart = self.art_row.len();
        if nart > 0 {
            let mut c1 = vec![0.0; self.ncols()];
            for a in 0..nart {
                c1[self.n + self.m + a] = 1.0;
            }
            self.set_cost(c1);
            self.refactor()?;
            let end = self.run_phase()?;
            self.stats.phase1_iterations = self.stats.iterations;
            let infeas: f64 = (0..nart).map(|a| self.x[self.n + self.m + a]).sum();
            let bscale = self.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            match end {
                PhaseEnd::IterationLimit => return Ok(self.finish(p, LpStatus::IterationLimit, None)),
                _ if infeas > self.opts.feas_tol * bscale => {
                    let y = self.duals();
                    return Ok(self.finish(p, LpStatus::Infeasible, Some(y)));
                }
                _ => {}
            }
            for a in 0..nart {
                let j = self.n + self.m + a;
                self.upper[j] = 0.0;
                if self.status[j] != Status::Basic {
                    self.status[j] = Status::Fixed;
                    self.x[j] = 0.0;
                }
            }
        }
        let c2 = self.phase2_cost.clone();
        self.set_cost(c2);
        self.refactor()?;
        let status = match self.run_phase()? {
            PhaseEnd::Optimal => LpStatus::Optimal,
            PhaseEnd::IterationLimit => LpStatus::IterationLimit,
            PhaseEnd::Unbounded(ray) => {
                let ray: Vec<f64> = ray[..self.n].to_vec();
                return Ok(self.finish(p, LpStatus::Unbounded, Some(ray)));
            }
        };
        Ok(self.finish(p, status, None))
    }

    fn finish(mut self, p: &LpProblem, status: LpStatus, ray: Option<Vec<f64>>) -> LpSolution {
        let sign = match p.sense() {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let primal: Vec<f64> = self.x[..self.n].to_vec();
        let y = self.duals();
        let objective = p.objective_value(&primal);
        let mut dual_obj = 0.0;
        for i in 0..self.m {
            dual_obj += self.rhs[i] * y[i];
        }
        let mut dual_resid = 0.0f64;
        for j in 0..self.ncols() {
            let mut dj = self.cost[j];
            self.for_column(j, |i, a| dj -= a * y[i]);
            if self.status[j] != Status::Basic {
                dual_obj += dj * self.x[j];
            }
            let viol = match self.status[j] {
                Status::Basic | Status::Free => dj.abs(),
                Status::AtLower => (-dj).max(0.0),
                Status::AtUpper => dj.max(0.0),
                Status::Fixed => 0.0,
            };
            dual_resid = dual_resid.max(viol);
        }
        let reduced: Vec<f64> = (0..self.n)
            .map(|j| {
                let mut dj = self.cost[j];
                self.for_column(j, |i, a| dj -= a * y[i]);
                sign * dj
            })
            .collect();
        self.stats.primal_residual = p.primal_residual(&primal);
        self.stats.dual_residual = dual_resid;
        self.stats.duality_gap = (sign * objective - dual_obj).abs();
        let dual: Vec<f64> = y.iter().map(|v| sign * v).collect();
        LpSolution {
            status,
            objective,
            dual_objective: sign * dual_obj,
            primal,
            dual: Some(dual),
            reduced_costs: Some(reduced),
            stats: self.stats,
            ray,
        }
    }
}

pub(crate) fn solve(p: &LpProblem, opts: &SolverOptions) -> Result<LpSolution, LpError> {
    Simplex::new(p, opts).solve(p)
}
