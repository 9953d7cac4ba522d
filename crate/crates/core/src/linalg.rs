//! Sparse symmetric positive definite solves.
//!
//! Envelope (skyline) Cholesky on a reverse Cuthill-McKee ordering, followed by
//! a few steps of iterative refinement.

use std::collections::{BTreeMap, VecDeque};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

/// Symmetric matrix stored as full rows of `(column, value)` pairs.
#[derive(Debug, Clone, Default)]
pub struct SparseSym {
    rows: Vec<BTreeMap<usize, f64>>,
}

impl SparseSym {
    pub fn new(n: usize) -> Self {
        Self { rows: vec![BTreeMap::new(); n] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` at `(i, j)` and, when `i != j`, at `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        *self.rows[i].entry(j).or_insert(0.0) += v;
        if i != j {
            *self.rows[j].entry(i).or_insert(0.0) += v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].get(&j).copied().unwrap_or(0.0)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows[i].iter().map(|(&j, &v)| (j, v))
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|(&j, &v)| v * x[j]).sum()).collect()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }
}

/// Reverse Cuthill-McKee ordering of the sparsity graph; `order[k]` is the
/// original index placed at position `k`.
fn rcm(m: &SparseSym) -> Vec<usize> {
    let n = m.dim();
    let degree: Vec<usize> = (0..n).map(|i| m.rows[i].len()).collect();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    let bfs = |start: usize, placed: &mut Vec<bool>, out: &mut Vec<usize>| {
        let mut queue = VecDeque::from([start]);
        placed[start] = true;
        while let Some(u) = queue.pop_front() {
            out.push(u);
            let mut next: Vec<usize> = m.rows[u].keys().copied().filter(|&w| !placed[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                placed[w] = true;
                queue.push_back(w);
            }
        }
    };
    for &seed in &by_degree {
        if placed[seed] {
            continue;
        }
        // One pass toward a pseudo-peripheral vertex: restart from the last vertex reached.
        let mut probe_mark = placed.clone();
        let mut probe = Vec::new();
        bfs(seed, &mut probe_mark, &mut probe);
        let start = *probe.last().unwrap_or(&seed);
        bfs(start, &mut placed, &mut order);
    }
    order.reverse();
    order
}

/// Envelope Cholesky factor `P A P^T = L L^T`.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    order: Vec<usize>,
    position: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    values: Vec<f64>,
}

impl SpdFactor {
    pub fn new(m: &SparseSym) -> Result<Self, LinalgError> {
        let n = m.dim();
        let order = rcm(m);
        let mut position = vec![0; n];
        for (k, &i) in order.iter().enumerate() {
            position[i] = k;
        }
        let mut first = vec![0; n];
        for (k, &i) in order.iter().enumerate() {
            first[k] = m.rows[i].keys().map(|&j| position[j]).filter(|&p| p <= k).min().unwrap_or(k);
        }
        let mut start = vec![0; n + 1];
        for k in 0..n {
            start[k + 1] = start[k] + (k - first[k] + 1);
        }
        let mut values = vec![0.0; start[n]];
        for (k, &i) in order.iter().enumerate() {
            for (&j, &v) in &m.rows[i] {
                let p = position[j];
                if p <= k {
                    values[start[k] + p - first[k]] += v;
                }
            }
        }
        for i in 0..n {
            for j in first[i]..=i {
                let lo = first[i].max(first[j]);
                let ri = start[i] + lo - first[i];
                let rj = start[j] + lo - first[j];
                let len = j - lo;
                let dot: f64 = values[ri..ri + len].iter().zip(&values[rj..rj + len]).map(|(a, b)| a * b).sum();
                let idx = start[i] + j - first[i];
                let s = values[idx] - dot;
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(LinalgError::NotPositiveDefinite { row: order[i], pivot: s });
                    }
                    values[idx] = s.sqrt();
                } else {
                    values[idx] = s / values[start[j] + j - first[j]];
                }
            }
        }
        Ok(Self { order, position, first, start, values })
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    fn diag(&self, i: usize) -> f64 {
        self.values[self.start[i] + i - self.first[i]]
    }

    /// Solves `A x = b` with the factor alone.
    pub fn solve_raw(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.order.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let row = &self.values[self.start[i]..self.start[i] + i - self.first[i]];
            let dot: f64 = row.iter().zip(&y[self.first[i]..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - dot) / self.diag(i);
        }
        for i in (0..n).rev() {
            y[i] /= self.diag(i);
            let yi = y[i];
            let row = &self.values[self.start[i]..self.start[i] + i - self.first[i]];
            for (t, &l) in row.iter().enumerate() {
                y[self.first[i] + t] -= l * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = y[self.position[i]];
        }
        x
    }
}

/// A factored SPD system with iterative refinement.
#[derive(Debug, Clone)]
pub struct SpdSolver {
    matrix: SparseSym,
    factor: SpdFactor,
}

/// Relative residual target for refinement.
pub const DEFAULT_TOL: f64 = 1e-10;

impl SpdSolver {
    pub fn new(matrix: SparseSym) -> Result<Self, LinalgError> {
        let factor = SpdFactor::new(&matrix)?;
        Ok(Self { matrix, factor })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &SparseSym {
        &self.matrix
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.dim() {
            return Err(LinalgError::Dimension { expected: self.dim(), got: b.len() });
        }
        let mut x = self.factor.solve_raw(b);
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for _ in 0..4 {
            let ax = self.matrix.mul(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let rmax = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if rmax <= DEFAULT_TOL * 1e-4 * scale {
                break;
            }
            let dx = self.factor.solve_raw(&r);
            for (xi, di) in x.iter_mut().zip(dx) {
                *xi += di;
            }
        }
        Ok(x)
    }

    /// `max |b - A x|`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        self.matrix.mul(x).iter().zip(b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}
