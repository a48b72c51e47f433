//! Sparse linear algebra: compressed-row matrices and a direct SPD solver.
//!
//! The solver is an envelope (skyline) Cholesky factorization under a
//! reverse Cuthill-McKee ordering. Both subproblem matrices and the Newton
//! corrector are SPD after constraint elimination, and the staggered
//! analysis assumes essentially exact subproblem solves, so the default
//! residual tolerance sits far below the staggered stopping tolerance.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("matrix not positive definite: nonpositive pivot {pivot:e} in row {row}")]
    NotSpd { row: usize, pivot: f64 },
    #[error("dimension mismatch: matrix is {n}x{n}, vector has length {len}")]
    DimensionMismatch { n: usize, len: usize },
}

/// Square sparse matrix in compressed-row layout with sorted, duplicate-free
/// column indices per row.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a zero matrix from per-row column index lists. Indices are
    /// sorted and deduplicated here.
    pub fn from_pattern(mut rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let vals = vec![0.0; cols.len()];
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn zero_values(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    pub fn scale_values(&mut self, s: f64) {
        self.vals.iter_mut().for_each(|v| *v *= s);
    }

    fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.cols[lo..hi].binary_search(&j).ok().map(|k| lo + k)
    }

    /// Accumulates into an existing pattern entry. Entries outside the
    /// pattern indicate an assembly bug and panic.
    pub fn add_entry(&mut self, i: usize, j: usize, v: f64) {
        match self.index_of(i, j) {
            Some(k) => self.vals[k] += v,
            None => panic!("entry ({i},{j}) not in sparsity pattern"),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.index_of(i, j).map_or(0.0, |k| self.vals[k])
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn row_mut(&mut self, i: usize) -> (&[usize], &mut [f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[lo..hi], &mut self.vals[lo..hi])
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            y[i] = s;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// self += s * other; both matrices must share the same pattern.
    pub fn add_scaled(&mut self, other: &CsrMatrix, s: f64) {
        assert_eq!(self.row_ptr, other.row_ptr, "pattern mismatch");
        debug_assert_eq!(self.cols, other.cols, "pattern mismatch");
        for (a, b) in self.vals.iter_mut().zip(&other.vals) {
            *a += s * b;
        }
    }

    /// Exact entrywise symmetry check, used by assembly tests.
    pub fn is_symmetric_exact(&self) -> bool {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (c, v) in cols.iter().zip(vals) {
                if self.get(*c, i) != *v {
                    return false;
                }
            }
        }
        true
    }
}

/// Reverse Cuthill-McKee ordering of the matrix graph. Returns `perm` with
/// `perm[new] = old`. Deterministic: ties break on ascending node id.
pub fn rcm_permutation(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let degree = |i: usize| a.row(i).0.len();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut component = Vec::new();

    let bfs = |start: usize, visited: &mut Vec<bool>, out: &mut Vec<usize>| {
        out.clear();
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(start);
        visited[start] = true;
        let mut nbrs = Vec::new();
        while let Some(i) = queue.pop_front() {
            out.push(i);
            nbrs.clear();
            nbrs.extend(a.row(i).0.iter().copied().filter(|&j| j != i && !visited[j]));
            nbrs.sort_unstable_by_key(|&j| (degree(j), j));
            for &j in &nbrs {
                if !visited[j] {
                    visited[j] = true;
                    queue.push_back(j);
                }
            }
        }
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral start: one BFS from the seed, restart from the
        // last (deepest) node found.
        let mut probe = visited.clone();
        bfs(seed, &mut probe, &mut component);
        let start = *component.last().unwrap();
        bfs(start, &mut visited, &mut component);
        order.extend_from_slice(&component);
    }
    order.reverse();
    order
}

/// Envelope Cholesky factorization L L^T of a permuted SPD matrix.
pub struct SpdFactor {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    offsets: Vec<usize>,
    env: Vec<f64>,
    diag: Vec<f64>,
}

impl SpdFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self, SolveError> {
        let perm = rcm_permutation(a);
        Self::with_permutation(a, perm)
    }

    pub fn with_permutation(a: &CsrMatrix, perm: Vec<usize>) -> Result<Self, SolveError> {
        let n = a.n();
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        // Envelope extent: first structural column of each permuted row.
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = iperm[old_i];
            for &old_j in a.row(old_i).0 {
                let j = iperm[old_j];
                if j < first[i] {
                    first[i] = j;
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for i in 0..n {
            offsets.push(offsets[i] + (i - first[i]));
        }
        let mut env = vec![0.0; offsets[n]];
        let mut diag = vec![0.0; n];
        for old_i in 0..n {
            let i = iperm[old_i];
            let (cols, vals) = a.row(old_i);
            for (&old_j, &v) in cols.iter().zip(vals) {
                let j = iperm[old_j];
                if j < i {
                    env[offsets[i] + (j - first[i])] = v;
                } else if j == i {
                    diag[i] = v;
                }
            }
        }
        // In-place factorization over the envelope.
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let k0 = fi.max(fj);
                let mut s = env[offsets[i] + (j - fi)];
                if k0 < j {
                    let ri = &env[offsets[i] + (k0 - fi)..offsets[i] + (j - fi)];
                    let rj = &env[offsets[j] + (k0 - fj)..offsets[j] + (j - fj)];
                    let mut dot = 0.0;
                    for (x, y) in ri.iter().zip(rj) {
                        dot += x * y;
                    }
                    s -= dot;
                }
                env[offsets[i] + (j - fi)] = s / diag[j];
            }
            let mut d = diag[i];
            for k in fi..i {
                let l = env[offsets[i] + (k - fi)];
                d -= l * l;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(SolveError::NotSpd { row: perm[i], pivot: d });
            }
            diag[i] = d.sqrt();
        }
        Ok(SpdFactor { n, perm, first, offsets, env, diag })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let fi = self.first[i];
            let mut s = b[self.perm[i]];
            let row = &self.env[self.offsets[i]..self.offsets[i + 1]];
            for (k, l) in row.iter().enumerate() {
                s -= l * y[fi + k];
            }
            y[i] = s / self.diag[i];
        }
        for i in (0..n).rev() {
            y[i] /= self.diag[i];
            let yi = y[i];
            let fi = self.first[i];
            let row = &self.env[self.offsets[i]..self.offsets[i + 1]];
            for (k, l) in row.iter().enumerate() {
                y[fi + k] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Direct solve of an SPD system with residual guarantee
/// ||A x - b|| <= tol ||b||.
///
/// A couple of iterative-refinement sweeps absorb roundoff on badly scaled
/// systems (the degraded stiffness has a kappa-sized contrast).
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>, SolveError> {
    if b.len() != a.n() {
        return Err(SolveError::DimensionMismatch { n: a.n(), len: b.len() });
    }
    let factor = SpdFactor::new(a)?;
    let mut x = factor.solve(b);
    let norm_b = norm(b);
    let mut residual = vec![0.0; a.n()];
    for _ in 0..3 {
        a.matvec(&x, &mut residual);
        for (r, bi) in residual.iter_mut().zip(b) {
            *r = bi - *r;
        }
        if norm(&residual) <= tol * norm_b {
            break;
        }
        let dx = factor.solve(&residual);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
    }
    #[cfg(debug_assertions)]
    {
        a.matvec(&x, &mut residual);
        for (r, bi) in residual.iter_mut().zip(b) {
            *r = bi - *r;
        }
        // The relative guarantee cannot undercut the roundoff floor of a
        // direct solve, eps * |A| * |x|; only genuine failures trip this.
        let row_norm = (0..a.n())
            .map(|i| a.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let x_inf = x.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
        let floor = 32.0 * f64::EPSILON * row_norm * x_inf * (a.n() as f64).sqrt();
        debug_assert!(
            norm(&residual) <= tol * norm_b + floor,
            "solve_spd residual {:e} exceeds {:e}",
            norm(&residual),
            tol * norm_b + floor
        );
    }
    Ok(x)
}

/// Default relative residual tolerance for subproblem solves.
pub const DEFAULT_SOLVE_TOL: f64 = 1e-12;
