//! Compressed sparse columns and the normal-equations factorization used by
//! the interior-point iterations.
//!
//! The normal matrix `A diag(w) Aᵀ` keeps the same pattern across iterations,
//! so the ordering and envelope are computed once per problem.

use nalgebra::DMatrix;

/// Column-compressed sparse matrix.
#[derive(Debug, Clone, Default)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut out = CscMatrix {
            nrows: m.nrows(),
            ncols: m.ncols(),
            col_ptr: Vec::with_capacity(m.ncols() + 1),
            row_idx: Vec::new(),
            values: Vec::new(),
        };
        out.col_ptr.push(0);
        for j in 0..m.ncols() {
            for (i, &v) in m.column(j).iter().enumerate() {
                if v != 0.0 {
                    out.row_idx.push(i);
                    out.values.push(v);
                }
            }
            out.col_ptr.push(out.row_idx.len());
        }
        out
    }

    /// Builds from per-column `(row, value)` lists. Entries must not repeat a row.
    pub fn from_columns(nrows: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        let mut out = CscMatrix {
            nrows,
            ncols: columns.len(),
            col_ptr: Vec::with_capacity(columns.len() + 1),
            row_idx: Vec::new(),
            values: Vec::new(),
        };
        out.col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|e| e.0);
            for (r, v) in col {
                debug_assert!(r < nrows);
                if v != 0.0 {
                    out.row_idx.push(r);
                    out.values.push(v);
                }
            }
            out.col_ptr.push(out.row_idx.len());
        }
        out
    }

    #[inline]
    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.col_ptr[j], self.col_ptr[j + 1]);
        (&self.row_idx[s..e], &self.values[s..e])
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.ncols {
            let xj = x[j];
            if xj == 0.0 {
                continue;
            }
            let (rows, vals) = self.column(j);
            for (&r, &v) in rows.iter().zip(vals) {
                y[r] += v * xj;
            }
        }
    }

    /// `y = Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (j, out) in y.iter_mut().enumerate().take(self.ncols) {
            let (rows, vals) = self.column(j);
            *out = rows.iter().zip(vals).map(|(&r, &v)| v * x[r]).sum();
        }
    }
}

/// Symmetric positive (semi)definite factorization of `A diag(w) Aᵀ + δI`
/// stored in envelope (skyline) form under a reverse Cuthill–McKee ordering.
#[derive(Debug, Clone)]
pub struct NormalFactor {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    /// inv[old] = new
    inv: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl NormalFactor {
    pub fn analyze(a: &CscMatrix) -> Self {
        let n = a.nrows;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..a.ncols {
            let (rows, _) = a.column(j);
            for &r1 in rows {
                for &r2 in rows {
                    if r1 != r2 {
                        adj[r1].push(r2);
                    }
                }
            }
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old in 0..n {
            let i = inv[old];
            for &nb in &adj[old] {
                let k = inv[nb];
                if k < first[i] {
                    first[i] = k;
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        let mut total = 0;
        for i in 0..n {
            offset.push(total);
            total += i - first[i] + 1;
        }
        offset.push(total);
        NormalFactor {
            n,
            perm,
            inv,
            first,
            offset,
            data: vec![0.0; total],
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        self.offset[i] + (j - self.first[i])
    }

    /// Assembles and factors `A diag(w) Aᵀ + reg·I`. Pivots that collapse
    /// (dependent rows) are replaced by a huge value so the row is ignored.
    pub fn factor(&mut self, a: &CscMatrix, w: &[f64], reg: f64) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..a.ncols {
            let wj = w[j];
            if wj == 0.0 {
                continue;
            }
            let (rows, vals) = a.column(j);
            for (p, &r1) in rows.iter().enumerate() {
                let i1 = self.inv[r1];
                let v1 = vals[p] * wj;
                for (q, &r2) in rows.iter().enumerate() {
                    let i2 = self.inv[r2];
                    if i2 <= i1 {
                        let idx = self.at(i1, i2);
                        self.data[idx] += v1 * vals[q];
                    }
                }
            }
        }
        let mut diag_orig = vec![0.0; self.n];
        for i in 0..self.n {
            let d = self.at(i, i);
            self.data[d] += reg;
            diag_orig[i] = self.data[d];
        }
        let max_diag = diag_orig.iter().cloned().fold(1.0, f64::max);
        for i in 0..self.n {
            let fi = self.first[i];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let mut s = self.data[self.at(i, j)];
                let ri = self.at(i, k0);
                let rj = self.at(j, k0);
                let len = j - k0;
                for t in 0..len {
                    s -= self.data[ri + t] * self.data[rj + t];
                }
                let djj = self.data[self.at(j, j)];
                let idx = self.at(i, j);
                self.data[idx] = s / djj;
            }
            let ri = self.at(i, fi);
            let mut d = self.data[self.at(i, i)];
            for t in 0..(i - fi) {
                d -= self.data[ri + t] * self.data[ri + t];
            }
            let idx = self.at(i, i);
            self.data[idx] = if d <= 1e-30 * max_diag.max(diag_orig[i]) {
                1e64
            } else {
                d.sqrt()
            };
        }
    }

    /// Solves `L Lᵀ x = b` in place (b in the original row order).
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|i| b[self.perm[i]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let ri = self.at(i, fi);
            let mut s = y[i];
            for (t, k) in (fi..i).enumerate() {
                s -= self.data[ri + t] * y[k];
            }
            y[i] = s / self.data[self.at(i, i)];
        }
        for i in (0..n).rev() {
            let yi = y[i] / self.data[self.at(i, i)];
            y[i] = yi;
            let fi = self.first[i];
            let ri = self.at(i, fi);
            for (t, k) in (fi..i).enumerate() {
                y[k] -= self.data[ri + t] * yi;
            }
        }
        for i in 0..n {
            b[self.perm[i]] = y[i];
        }
    }
}

fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (adj[i].len(), i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        let root = pseudo_peripheral(adj, start);
        let begin = order.len();
        visited[root] = true;
        order.push(root);
        let mut head = begin;
        while head < order.len() {
            let node = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[node].iter().copied().filter(|&v| !visited[v]).collect();
            next.sort_by_key(|&v| (adj[v].len(), v));
            for v in next {
                visited[v] = true;
                order.push(v);
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(adj: &[Vec<usize>], start: usize) -> usize {
    let mut root = start;
    let mut ecc = 0;
    for _ in 0..4 {
        let (far, depth) = bfs_farthest(adj, root);
        if depth <= ecc {
            break;
        }
        ecc = depth;
        root = far;
    }
    root
}

fn bfs_farthest(adj: &[Vec<usize>], root: usize) -> (usize, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut queue = std::collections::VecDeque::from([root]);
    let mut last = root;
    while let Some(v) = queue.pop_front() {
        last = v;
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    // prefer the lowest-degree node on the deepest level
    let depth = level[last];
    let far = (0..adj.len())
        .filter(|&v| level[v] == depth)
        .min_by_key(|&v| adj[v].len())
        .unwrap_or(last);
    (far, depth)
}
