//! Full generators on `{0,1}^V`, their stationary vectors and transient laws.
//!
//! State `s` encodes `eta(x) = bit x of s`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use super::{Configuration, ExclusionError, ExclusionSystem};

/// Default cap on the number of sites for state-space work.
pub const DEFAULT_STATE_CAP: usize = 14;

/// Above this many states the stationary solve switches to Gauss-Seidel.
pub const DENSE_STATE_LIMIT: usize = 1 << 10;

/// Sparse rate matrix with row sums zero.
#[derive(Debug, Clone)]
pub struct Generator {
    /// Off-diagonal `(target, rate)` per state.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Diagonal entries (minus the total exit rate).
    pub diag: Vec<f64>,
    /// State index in `{0,1}^V` for each row.
    pub states: Vec<usize>,
    pub n_sites: usize,
}

impl Generator {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `max |row sum|`.
    pub fn row_sum_residual(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.diag)
            .map(|(r, d)| (r.iter().map(|e| e.1).sum::<f64>() + d).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut q = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            q[(i, i)] = self.diag[i];
            for &(j, r) in row {
                q[(i, j)] += r;
            }
        }
        q
    }

    /// `mu Q` for a row vector `mu`.
    pub fn left_mul(&self, mu: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = mu.iter().zip(&self.diag).map(|(m, d)| m * d).collect();
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, r) in row {
                out[j] += mu[i] * r;
            }
        }
        out
    }

    fn strongly_connected(&self) -> bool {
        let n = self.dim();
        if n == 0 {
            return true;
        }
        let mut incoming = vec![Vec::new(); n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                incoming[j].push(i);
            }
        }
        let reach = |adj: &dyn Fn(usize) -> Vec<usize>| {
            let mut seen = vec![false; n];
            seen[0] = true;
            let mut queue = VecDeque::from([0]);
            let mut count = 1;
            while let Some(u) = queue.pop_front() {
                for w in adj(u) {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        queue.push_back(w);
                    }
                }
            }
            count == n
        };
        reach(&|u| self.rows[u].iter().map(|e| e.0).collect()) && reach(&|u| incoming[u].clone())
    }
}

fn check_cap(n_sites: usize, cap: usize) -> Result<(), ExclusionError> {
    if n_sites > cap || n_sites >= usize::BITS as usize - 1 {
        return Err(ExclusionError::StateSpaceTooLarge { sites: n_sites, cap });
    }
    Ok(())
}

/// Generator on all `2^n` states.
pub fn generator_matrix(sys: &ExclusionSystem, cap: usize) -> Result<Generator, ExclusionError> {
    check_cap(sys.n_sites(), cap)?;
    let states: Vec<usize> = (0..1usize << sys.n_sites()).collect();
    Ok(build(sys, states))
}

/// Generator restricted to the hyperplane of configurations with `k`
/// particles; only meaningful for conservative systems.
pub fn hyperplane_generator(sys: &ExclusionSystem, k: usize, cap: usize) -> Result<Generator, ExclusionError> {
    check_cap(sys.n_sites(), cap)?;
    if !sys.is_conservative() {
        return Err(ExclusionError::NotConservative);
    }
    if k > sys.n_sites() {
        return Err(ExclusionError::KOutOfRange { k, n: sys.n_sites() });
    }
    let states: Vec<usize> = (0..1usize << sys.n_sites()).filter(|s| s.count_ones() as usize == k).collect();
    Ok(build(sys, states))
}

fn build(sys: &ExclusionSystem, states: Vec<usize>) -> Generator {
    let n = sys.n_sites();
    let mut position = std::collections::HashMap::with_capacity(states.len());
    for (i, &s) in states.iter().enumerate() {
        position.insert(s, i);
    }
    let mut rows = Vec::with_capacity(states.len());
    let mut diag = Vec::with_capacity(states.len());
    for &s in &states {
        let eta = Configuration::from_index(n, s);
        let mut row = Vec::new();
        let mut total = 0.0;
        for t in 0..sys.transition_count() {
            let r = sys.rate(t, &eta);
            if r > 0.0 {
                let mut next = eta.clone();
                sys.apply(t, &mut next);
                row.push((position[&next.index()], r));
                total += r;
            }
        }
        rows.push(row);
        diag.push(-total);
    }
    Generator { rows, diag, states, n_sites: n }
}

/// Normalized left null vector of an irreducible generator.
pub fn stationary_distribution(q: &Generator) -> Result<Vec<f64>, ExclusionError> {
    let n = q.dim();
    if !q.strongly_connected() {
        return Err(ExclusionError::NotIrreducible);
    }
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let mut mu = if n <= DENSE_STATE_LIMIT { dense_null_vector(q)? } else { gauss_seidel(q) };
    for m in &mut mu {
        if *m < 0.0 {
            *m = 0.0;
        }
    }
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|m| *m /= total);
    Ok(mu)
}

fn dense_null_vector(q: &Generator) -> Result<Vec<f64>, ExclusionError> {
    let n = q.dim();
    let mut a = q.to_dense().transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(ExclusionError::NotIrreducible)?;
    Ok(x.iter().copied().collect())
}

fn gauss_seidel(q: &Generator) -> Vec<f64> {
    let n = q.dim();
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in q.rows.iter().enumerate() {
        for &(j, r) in row {
            incoming[j].push((i, r));
        }
    }
    let mut mu = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        for j in 0..n {
            let inflow: f64 = incoming[j].iter().map(|&(i, r)| mu[i] * r).sum();
            mu[j] = inflow / -q.diag[j];
        }
        let total: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|m| *m /= total);
        let res = q.left_mul(&mu).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res <= 1e-13 {
            break;
        }
    }
    mu
}

/// `max |mu Q|`.
pub fn stationary_residual(q: &Generator, mu: &[f64]) -> f64 {
    q.left_mul(mu).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// One-site marginals `P[eta(x) = 1]` of a distribution over `q.states`.
pub fn marginals(q: &Generator, mu: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; q.n_sites];
    for (&s, &m) in q.states.iter().zip(mu) {
        for (x, o) in out.iter_mut().enumerate() {
            if s >> x & 1 == 1 {
                *o += m;
            }
        }
    }
    out
}

/// Law at time `t` started from `mu0`, by uniformization.
pub fn transient_distribution(q: &Generator, mu0: &[f64], t: f64) -> Vec<f64> {
    let rate = q.diag.iter().fold(0.0f64, |m, d| m.max(-d));
    if rate == 0.0 || t <= 0.0 {
        return mu0.to_vec();
    }
    // Keep each Poisson mean moderate so the weights stay well scaled.
    let chunks = (rate * t / 20.0).ceil().max(1.0) as usize;
    let dt = t / chunks as f64;
    let lam = rate * dt;
    let step = |v: &[f64]| {
        let mut out = v.to_vec();
        let moved = q.left_mul(v);
        for (o, m) in out.iter_mut().zip(moved) {
            *o += m / rate;
        }
        out
    };
    let mut mu = mu0.to_vec();
    for _ in 0..chunks {
        let mut term = mu.clone();
        let mut weight = (-lam).exp();
        let mut acc: Vec<f64> = term.iter().map(|v| v * weight).collect();
        let mut cumulative = weight;
        let mut k = 0usize;
        while 1.0 - cumulative > 1e-15 && k < 10_000 {
            k += 1;
            term = step(&term);
            weight *= lam / k as f64;
            cumulative += weight;
            for (a, v) in acc.iter_mut().zip(&term) {
                *a += weight * v;
            }
        }
        mu = acc;
    }
    mu
}
