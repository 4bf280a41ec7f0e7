//! Sparse LU factorization of simplex basis matrices.
//!
//! The factorization runs singleton elimination first (game-tree bases are close to
//! triangular) and falls back to Markowitz pivoting with a threshold test on the
//! remaining nucleus. Basis changes between refactorizations are absorbed by an eta
//! file in product form.

const DROP_TOL: f64 = 1e-14;
const THRESHOLD: f64 = 0.01;
const MARKOWITZ_COLS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Singular {
    pub rank: usize,
    /// Basis positions that received a pivot before elimination stalled.
    pub pivoted_cols: Vec<usize>,
    /// Rows that received a pivot.
    pub pivoted_rows: Vec<usize>,
}

#[derive(Debug, Default, Clone)]
pub(crate) struct BasisFactor {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_col: Vec<usize>,
    pivot_val: Vec<f64>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // U by pivot, row-wise: entries (basis position, value) right of the pivot.
    ur_start: Vec<usize>,
    ur_idx: Vec<usize>,
    ur_val: Vec<f64>,
    // U by pivot, column-wise: entries (row, value) above the pivot.
    uc_start: Vec<usize>,
    uc_idx: Vec<usize>,
    uc_val: Vec<f64>,
    eta_pos: Vec<usize>,
    eta_piv: Vec<f64>,
    eta_start: Vec<usize>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
}

impl BasisFactor {
    /// Factorizes the `m x m` matrix whose column `k` is `columns[k]` (row, value pairs).
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<Self, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (j, col) in columns.iter().enumerate() {
            for &(i, v) in col {
                if v.abs() > DROP_TOL {
                    rows[i].push((j, v));
                    cols[j].push(i);
                }
            }
        }
        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];
        let mut col_bucket: Vec<Vec<usize>> = vec![Vec::new(); m + 2];
        let mut row_bucket: Vec<Vec<usize>> = vec![Vec::new(); m + 2];
        for j in 0..m {
            col_bucket[cols[j].len().min(m + 1)].push(j);
        }
        for i in 0..m {
            row_bucket[rows[i].len().min(m + 1)].push(i);
        }

        let mut f = BasisFactor {
            m,
            ..Default::default()
        };
        f.l_start.push(0);
        f.ur_start.push(0);
        let mut marker = vec![usize::MAX; m];
        let mut touched_cols: Vec<usize> = Vec::new();

        for step in 0..m {
            let (pr, pc) = match choose_pivot(
                &rows,
                &cols,
                &row_done,
                &col_done,
                &mut col_bucket,
                &mut row_bucket,
            ) {
                Some(p) => p,
                None => {
                    return Err(Singular { rank: step, pivoted_cols: f.pivot_col, pivoted_rows: f.pivot_row })
                }
            };
            let pval = entry(&rows[pr], pc).expect("pivot entry present");

            // Record U row (excluding pivot) and detach the pivot row from column patterns.
            let prow = std::mem::take(&mut rows[pr]);
            for &(j, v) in &prow {
                remove_from(&mut cols[j], pr);
                if j != pc {
                    f.ur_idx.push(j);
                    f.ur_val.push(v);
                }
            }
            f.ur_start.push(f.ur_idx.len());
            row_done[pr] = true;
            col_done[pc] = true;

            // Eliminate column pc from the remaining rows.
            let elim_rows = std::mem::take(&mut cols[pc]);
            touched_cols.clear();
            for &r in &elim_rows {
                let arc = take_entry(&mut rows[r], pc);
                let mult = arc / pval;
                if mult.abs() <= DROP_TOL {
                    row_bucket[rows[r].len().min(m + 1)].push(r);
                    continue;
                }
                f.l_idx.push(r);
                f.l_val.push(mult);
                for (k, &(j, _)) in rows[r].iter().enumerate() {
                    marker[j] = k;
                }
                for &(j, v) in &prow {
                    if j == pc {
                        continue;
                    }
                    let k = marker[j];
                    if k != usize::MAX && k < rows[r].len() && rows[r][k].0 == j {
                        rows[r][k].1 -= mult * v;
                    } else {
                        rows[r].push((j, -mult * v));
                        cols[j].push(r);
                        touched_cols.push(j);
                    }
                }
                for &(j, _) in rows[r].iter() {
                    marker[j] = usize::MAX;
                }
                // Drop cancelled entries.
                let mut idx = 0;
                while idx < rows[r].len() {
                    if rows[r][idx].1.abs() <= DROP_TOL {
                        let (j, _) = rows[r].swap_remove(idx);
                        remove_from(&mut cols[j], r);
                        touched_cols.push(j);
                    } else {
                        idx += 1;
                    }
                }
                let c = rows[r].len().min(m + 1);
                row_bucket[c].push(r);
            }
            f.l_start.push(f.l_idx.len());
            for &(j, _) in &prow {
                if !col_done[j] {
                    touched_cols.push(j);
                }
            }
            for &j in &touched_cols {
                if !col_done[j] {
                    col_bucket[cols[j].len().min(m + 1)].push(j);
                }
            }
            f.pivot_row.push(pr);
            f.pivot_col.push(pc);
            f.pivot_val.push(pval);
        }

        // Column-wise copy of U.
        let mut col_to_k = vec![0usize; m];
        for (k, &j) in f.pivot_col.iter().enumerate() {
            col_to_k[j] = k;
        }
        let mut counts = vec![0usize; m + 1];
        for &j in &f.ur_idx {
            counts[col_to_k[j] + 1] += 1;
        }
        for k in 0..m {
            counts[k + 1] += counts[k];
        }
        f.uc_start = counts.clone();
        f.uc_idx = vec![0; f.ur_idx.len()];
        f.uc_val = vec![0.0; f.ur_idx.len()];
        let mut fill = counts;
        for k in 0..m {
            let row = f.pivot_row[k];
            for p in f.ur_start[k]..f.ur_start[k + 1] {
                let kk = col_to_k[f.ur_idx[p]];
                let dst = fill[kk];
                f.uc_idx[dst] = row;
                f.uc_val[dst] = f.ur_val[p];
                fill[kk] += 1;
            }
        }
        f.eta_start.push(0);
        Ok(f)
    }

    pub fn num_etas(&self) -> usize {
        self.eta_pos.len()
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_idx.len()
    }

    pub fn lu_nnz(&self) -> usize {
        self.l_idx.len() + self.ur_idx.len() + self.m
    }

    /// Solves `B x = a` in place. On entry `x` is indexed by row, on exit by basis position.
    pub fn ftran(&self, x: &mut [f64], work: &mut [f64]) {
        let m = self.m;
        for k in 0..m {
            let xi = x[self.pivot_row[k]];
            if xi != 0.0 {
                for p in self.l_start[k]..self.l_start[k + 1] {
                    x[self.l_idx[p]] -= self.l_val[p] * xi;
                }
            }
        }
        for k in (0..m).rev() {
            let v = x[self.pivot_row[k]] / self.pivot_val[k];
            work[self.pivot_col[k]] = v;
            if v != 0.0 {
                for p in self.uc_start[k]..self.uc_start[k + 1] {
                    x[self.uc_idx[p]] -= self.uc_val[p] * v;
                }
            }
        }
        x.copy_from_slice(&work[..m]);
        for e in 0..self.eta_pos.len() {
            let r = self.eta_pos[e];
            let xr = x[r] / self.eta_piv[e];
            x[r] = xr;
            if xr != 0.0 {
                for p in self.eta_start[e]..self.eta_start[e + 1] {
                    x[self.eta_idx[p]] -= self.eta_val[p] * xr;
                }
            }
        }
    }

    /// Solves `B^T y = c` in place. On entry `y` is indexed by basis position, on exit by row.
    pub fn btran(&self, y: &mut [f64], work: &mut [f64]) {
        let m = self.m;
        for e in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[e];
            let mut acc = y[r];
            for p in self.eta_start[e]..self.eta_start[e + 1] {
                acc -= self.eta_val[p] * y[self.eta_idx[p]];
            }
            y[r] = acc / self.eta_piv[e];
        }
        for k in 0..m {
            let w = y[self.pivot_col[k]] / self.pivot_val[k];
            work[self.pivot_row[k]] = w;
            if w != 0.0 {
                for p in self.ur_start[k]..self.ur_start[k + 1] {
                    y[self.ur_idx[p]] -= self.ur_val[p] * w;
                }
            }
        }
        y.copy_from_slice(&work[..m]);
        for k in (0..m).rev() {
            let i = self.pivot_row[k];
            let mut acc = y[i];
            for p in self.l_start[k]..self.l_start[k + 1] {
                acc -= self.l_val[p] * y[self.l_idx[p]];
            }
            y[i] = acc;
        }
    }

    /// Records the replacement of basis position `pos` by a column whose FTRAN image is
    /// `alpha` (indexed by basis position).
    pub fn push_eta(&mut self, pos: usize, alpha: &[f64]) {
        self.eta_pos.push(pos);
        self.eta_piv.push(alpha[pos]);
        for (i, &a) in alpha.iter().enumerate() {
            if i != pos && a.abs() > DROP_TOL {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.eta_start.push(self.eta_idx.len());
    }
}

fn entry(row: &[(usize, f64)], col: usize) -> Option<f64> {
    row.iter().find(|&&(j, _)| j == col).map(|&(_, v)| v)
}

fn take_entry(row: &mut Vec<(usize, f64)>, col: usize) -> f64 {
    let k = row
        .iter()
        .position(|&(j, _)| j == col)
        .expect("column pattern and row storage agree");
    row.swap_remove(k).1
}

fn remove_from(list: &mut Vec<usize>, item: usize) {
    if let Some(k) = list.iter().position(|&x| x == item) {
        list.swap_remove(k);
    }
}

fn col_max(rows: &[Vec<(usize, f64)>], col_rows: &[usize], col: usize) -> f64 {
    col_rows
        .iter()
        .filter_map(|&r| entry(&rows[r], col))
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn choose_pivot(
    rows: &[Vec<(usize, f64)>],
    cols: &[Vec<usize>],
    row_done: &[bool],
    col_done: &[bool],
    col_bucket: &mut [Vec<usize>],
    row_bucket: &mut [Vec<usize>],
) -> Option<(usize, usize)> {
    // Column singletons: no elimination needed.
    while let Some(j) = col_bucket[1].pop() {
        if col_done[j] || cols[j].len() != 1 {
            continue;
        }
        let r = cols[j][0];
        if entry(&rows[r], j).is_some_and(|v| v.abs() > DROP_TOL) {
            return Some((r, j));
        }
    }
    // Row singletons: elimination without fill, subject to the threshold test.
    let mut deferred = Vec::new();
    let mut found = None;
    while let Some(i) = row_bucket[1].pop() {
        if row_done[i] || rows[i].len() != 1 {
            continue;
        }
        let (j, v) = rows[i][0];
        if v.abs() >= THRESHOLD * col_max(rows, &cols[j], j) {
            found = Some((i, j));
            break;
        }
        deferred.push(i);
    }
    row_bucket[1].extend(deferred);
    if found.is_some() {
        return found;
    }
    // Markowitz search over the sparsest columns.
    let mut best: Option<(usize, usize, usize)> = None;
    let mut examined = 0;
    for count in 1..col_bucket.len() {
        if examined >= MARKOWITZ_COLS && best.is_some() {
            break;
        }
        let bucket = std::mem::take(&mut col_bucket[count]);
        let mut keep = Vec::with_capacity(bucket.len());
        for &j in &bucket {
            if col_done[j] || cols[j].len() != count {
                continue;
            }
            keep.push(j);
            if examined >= MARKOWITZ_COLS && best.is_some() {
                continue;
            }
            examined += 1;
            let cmax = col_max(rows, &cols[j], j);
            for &r in &cols[j] {
                let v = entry(&rows[r], j).unwrap_or(0.0);
                if v.abs() < THRESHOLD * cmax || v.abs() <= DROP_TOL {
                    continue;
                }
                let cost = (rows[r].len() - 1) * (count - 1);
                let better = match best {
                    None => true,
                    Some((bc, br, bj)) => cost < bc || (cost == bc && (j, r) < (bj, br)),
                };
                if better {
                    best = Some((cost, r, j));
                }
            }
        }
        col_bucket[count] = keep;
    }
    best.map(|(_, r, j)| (r, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_to_cols(a: &[Vec<f64>]) -> Vec<Vec<(usize, f64)>> {
        let m = a.len();
        (0..m)
            .map(|j| {
                (0..m)
                    .filter(|&i| a[i][j] != 0.0)
                    .map(|i| (i, a[i][j]))
                    .collect()
            })
            .collect()
    }

    fn matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
            .collect()
    }

    fn mat_t_vec(a: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let m = a.len();
        (0..m).map(|j| (0..m).map(|i| a[i][j] * y[i]).sum()).collect()
    }

    #[test]
    fn solves_dense_system() {
        let a = vec![
            vec![4.0, 1.0, 0.0, 2.0],
            vec![1.0, 3.0, 1.0, 0.0],
            vec![0.0, 1.0, 5.0, 1.0],
            vec![2.0, 0.0, 1.0, 6.0],
        ];
        let f = BasisFactor::factorize(4, &dense_to_cols(&a)).unwrap();
        let b = vec![1.0, -2.0, 3.0, 0.5];
        let mut x = b.clone();
        let mut work = vec![0.0; 4];
        f.ftran(&mut x, &mut work);
        let back = matvec(&a, &x);
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
        let mut y = b.clone();
        f.btran(&mut y, &mut work);
        let back = mat_t_vec(&a, &y);
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn eta_updates_track_column_replacement() {
        let mut a = vec![
            vec![1.0, 0.0, 0.0],
            vec![2.0, 1.0, 0.0],
            vec![0.0, 3.0, 1.0],
        ];
        let mut f = BasisFactor::factorize(3, &dense_to_cols(&a)).unwrap();
        let newcol = vec![1.0, 1.0, 1.0];
        let mut alpha = newcol.clone();
        let mut work = vec![0.0; 3];
        f.ftran(&mut alpha, &mut work);
        f.push_eta(1, &alpha);
        for i in 0..3 {
            a[i][1] = newcol[i];
        }
        let b = vec![0.3, -1.0, 2.0];
        let mut x = b.clone();
        f.ftran(&mut x, &mut work);
        let back = matvec(&a, &x);
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
        let mut y = b.clone();
        f.btran(&mut y, &mut work);
        let back = mat_t_vec(&a, &y);
        for (p, q) in back.iter().zip(&b) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn detects_singular_matrix() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(BasisFactor::factorize(2, &dense_to_cols(&a)).is_err());
    }
}
