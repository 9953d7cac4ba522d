//! Random-walk potential theory on weighted graphs.
//!
//! Exit and hitting times count steps of the jump chain `P(x, y) = c_xy / c_x`.
//! They solve `(I - P) t = 1`, which after multiplying by `c_x` is the SPD
//! system `L_A t = c_A` for the killed Laplacian `L_A`.

mod scaling;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::exclusion::{BoundarySpec, ExclusionError};
use crate::graph::{GraphError, Vertex, WeightedGraph};
use crate::linalg::{LinalgError, SparseSym, SpdSolver};

pub use scaling::{
    level_scales, scaling_report, ExitMode, LevelScaling, LinearFit, ProbeStat, ScalingOptions, ScalingReport,
    VolumeMode,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("function has {got} values, graph has {expected} vertices")]
    MissingValue { expected: usize, got: usize },
    #[error("boundary set is empty")]
    EmptyBoundary,
    #[error("vertex set is empty")]
    EmptySet,
    #[error("vertex sets overlap")]
    OverlappingSets,
    #[error("complement of the set is empty")]
    ComplementEmpty,
    #[error("the two vertices coincide")]
    SameVertex,
    #[error("unknown vertex {0}")]
    UnknownVertex(Vertex),
    #[error("boundary vertices {0} and {1} are adjacent")]
    BoundaryEdgePresent(Vertex, Vertex),
    #[error("harmonic solve violates the maximum principle by {0:e}")]
    MaximumPrinciple(f64),
    #[error("Robin and Dirichlet-to-Neumann solutions differ by {0:e}")]
    InconsistentSolutions(f64),
    #[error("density bounds violated by {0:e}")]
    DensityBounds(f64),
    #[error("scaling report needs at least 3 levels, got {0}")]
    TooFewLevels(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Boundary(#[from] ExclusionError),
}

type Result<T> = std::result::Result<T, PotentialError>;

/// `sum over edges of c_xy (f(x) - f(y))^2`, each edge once.
pub fn dirichlet_energy(g: &WeightedGraph, f: &[f64]) -> Result<f64> {
    check_len(g, f)?;
    Ok(g.edges().iter().map(|&(u, v, c)| c * (f[u] - f[v]).powi(2)).sum())
}

fn check_len(g: &WeightedGraph, f: &[f64]) -> Result<()> {
    if f.len() != g.vertex_count() {
        return Err(PotentialError::MissingValue { expected: g.vertex_count(), got: f.len() });
    }
    Ok(())
}

fn check_vertices(g: &WeightedGraph, set: &[Vertex]) -> Result<()> {
    match set.iter().find(|&&v| v >= g.vertex_count()) {
        Some(&v) => Err(PotentialError::UnknownVertex(v)),
        None => Ok(()),
    }
}

/// Factored killed Laplacian on the non-absorbing vertices.
#[derive(Debug, Clone)]
pub struct KilledLaplacian {
    free: Vec<Vertex>,
    local: Vec<usize>,
    solver: Option<SpdSolver>,
}

impl KilledLaplacian {
    /// `absorbing[x]` marks vertices where the walk is stopped. At least one
    /// vertex must be absorbing.
    pub fn new(g: &WeightedGraph, absorbing: &[bool]) -> Result<Self> {
        let n = g.vertex_count();
        if !absorbing.iter().any(|&a| a) {
            return Err(PotentialError::EmptyBoundary);
        }
        let free: Vec<Vertex> = (0..n).filter(|&x| !absorbing[x]).collect();
        let mut local = vec![usize::MAX; n];
        for (i, &x) in free.iter().enumerate() {
            local[x] = i;
        }
        let solver = if free.is_empty() {
            None
        } else {
            let mut m = SparseSym::new(free.len());
            for (i, &x) in free.iter().enumerate() {
                m.add(i, i, g.weight(x));
            }
            for &(u, v, c) in g.edges() {
                if local[u] != usize::MAX && local[v] != usize::MAX {
                    m.add(local[u], local[v], -c);
                }
            }
            Some(SpdSolver::new(m)?)
        };
        Ok(Self { free, local, solver })
    }

    pub fn free(&self) -> &[Vertex] {
        &self.free
    }

    /// Solves `L_A u = rhs` where `rhs` is indexed like `free()`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.solver {
            Some(s) => Ok(s.solve(rhs)?),
            None => Ok(Vec::new()),
        }
    }

    /// Harmonic extension of the absorbing-vertex values in `values` (other
    /// entries are ignored).
    pub fn extend(&self, g: &WeightedGraph, values: &[f64]) -> Result<Vec<f64>> {
        let rhs: Vec<f64> = self
            .free
            .iter()
            .map(|&x| {
                g.neighbors(x)
                    .iter()
                    .filter(|(y, _)| self.local[*y] == usize::MAX)
                    .map(|&(y, c)| c * values[y])
                    .sum()
            })
            .collect();
        let inner = self.solve(&rhs)?;
        let mut out = values.to_vec();
        for (i, &x) in self.free.iter().enumerate() {
            out[x] = inner[i];
        }
        Ok(out)
    }
}

/// Solution of a Dirichlet problem.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicField {
    pub values: Vec<f64>,
    pub boundary: Vec<Vertex>,
    pub boundary_values: Vec<f64>,
    /// Max interior residual of `sum_y c_xy (h(y) - h(x))`.
    pub residual: f64,
}

impl HarmonicField {
    /// Amount by which interior values leave `[min, max]` of the boundary values.
    pub fn maximum_principle_excess(&self) -> f64 {
        let lo = self.boundary_values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.boundary_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.values.iter().map(|&v| (lo - v).max(v - hi)).fold(0.0, f64::max)
    }
}

/// Interior residual `max |sum_y c_xy (h(y) - h(x))|` off `boundary`.
pub fn interior_residual(g: &WeightedGraph, h: &[f64], absorbing: &[bool]) -> f64 {
    (0..g.vertex_count())
        .filter(|&x| !absorbing[x])
        .map(|x| g.neighbors(x).iter().map(|&(y, c)| c * (h[y] - h[x])).sum::<f64>().abs())
        .fold(0.0, f64::max)
}

fn mask(g: &WeightedGraph, set: &[Vertex]) -> Vec<bool> {
    let mut m = vec![false; g.vertex_count()];
    for &v in set {
        m[v] = true;
    }
    m
}

pub fn solve_harmonic(g: &WeightedGraph, boundary: &[Vertex], values: &[f64]) -> Result<HarmonicField> {
    if boundary.is_empty() {
        return Err(PotentialError::EmptyBoundary);
    }
    if values.len() != boundary.len() {
        return Err(PotentialError::MissingValue { expected: boundary.len(), got: values.len() });
    }
    check_vertices(g, boundary)?;
    let absorbing = mask(g, boundary);
    let solver = KilledLaplacian::new(g, &absorbing)?;
    let mut full = vec![0.0; g.vertex_count()];
    for (&b, &v) in boundary.iter().zip(values) {
        full[b] = v;
    }
    let h = solver.extend(g, &full)?;
    let field = HarmonicField {
        residual: interior_residual(g, &h, &absorbing),
        values: h,
        boundary: boundary.to_vec(),
        boundary_values: values.to_vec(),
    };
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let excess = field.maximum_principle_excess();
    if excess > 1e-9 * scale {
        return Err(PotentialError::MaximumPrinciple(excess));
    }
    Ok(field)
}

/// `R_eff(A1, A2)`, the reciprocal of the minimal energy of potentials equal
/// to 1 on `a1` and 0 on `a2`.
pub fn effective_resistance(g: &WeightedGraph, a1: &[Vertex], a2: &[Vertex]) -> Result<f64> {
    if a1.is_empty() || a2.is_empty() {
        return Err(PotentialError::EmptySet);
    }
    check_vertices(g, a1)?;
    check_vertices(g, a2)?;
    let (mut s1, mut s2) = (a1.to_vec(), a2.to_vec());
    s1.sort_unstable();
    s1.dedup();
    s2.sort_unstable();
    s2.dedup();
    if s1.iter().any(|v| s2.binary_search(v).is_ok()) {
        return Err(PotentialError::OverlappingSets);
    }
    // Fixed orientation makes the result exactly symmetric.
    if s2 < s1 {
        std::mem::swap(&mut s1, &mut s2);
    }
    let boundary: Vec<Vertex> = s1.iter().chain(&s2).copied().collect();
    let values: Vec<f64> = s1.iter().map(|_| 1.0).chain(s2.iter().map(|_| 0.0)).collect();
    let h = solve_harmonic(g, &boundary, &values)?;
    Ok(1.0 / dirichlet_energy(g, &h.values)?)
}

pub fn effective_resistance_pair(g: &WeightedGraph, x: Vertex, y: Vertex) -> Result<f64> {
    if x == y {
        return Err(PotentialError::SameVertex);
    }
    effective_resistance(g, &[x], &[y])
}

/// Green function `G^A(x, y)`: expected visits of the jump chain to `y`
/// started at `x` before leaving `A`. Rows and columns follow sorted `A`.
pub fn green_function(g: &WeightedGraph, a: &[Vertex]) -> Result<(Vec<Vertex>, DMatrix<f64>)> {
    let (set, solver) = killed_on(g, a)?;
    let k = set.len();
    let mut out = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut e = vec![0.0; k];
        e[j] = g.weight(set[j]);
        let col = solver.solve(&e)?;
        for i in 0..k {
            out[(i, j)] = col[i];
        }
    }
    Ok((set, out))
}

fn killed_on(g: &WeightedGraph, a: &[Vertex]) -> Result<(Vec<Vertex>, KilledLaplacian)> {
    if a.is_empty() {
        return Err(PotentialError::EmptySet);
    }
    check_vertices(g, a)?;
    let inside = mask(g, a);
    let absorbing: Vec<bool> = inside.iter().map(|&m| !m).collect();
    if !absorbing.iter().any(|&b| b) {
        return Err(PotentialError::ComplementEmpty);
    }
    let solver = KilledLaplacian::new(g, &absorbing)?;
    Ok((solver.free().to_vec(), solver))
}

/// Mean exit times `E_x[T_{A^c}]` for every vertex (zero outside `A`).
pub fn exit_times(g: &WeightedGraph, a: &[Vertex]) -> Result<Vec<f64>> {
    let (set, solver) = killed_on(g, a)?;
    let rhs: Vec<f64> = set.iter().map(|&x| g.weight(x)).collect();
    let t = solver.solve(&rhs)?;
    let mut out = vec![0.0; g.vertex_count()];
    for (i, &x) in set.iter().enumerate() {
        out[x] = t[i];
    }
    Ok(out)
}

pub fn mean_exit_time(g: &WeightedGraph, x: Vertex, a: &[Vertex]) -> Result<f64> {
    check_vertices(g, &[x])?;
    Ok(exit_times(g, a)?[x])
}

/// Mean hitting times of `target` from every vertex.
pub fn hitting_times(g: &WeightedGraph, target: &[Vertex]) -> Result<Vec<f64>> {
    if target.is_empty() {
        return Err(PotentialError::EmptySet);
    }
    check_vertices(g, target)?;
    let hit = mask(g, target);
    let rest: Vec<Vertex> = (0..g.vertex_count()).filter(|&x| !hit[x]).collect();
    if rest.is_empty() {
        return Ok(vec![0.0; g.vertex_count()]);
    }
    exit_times(g, &rest)
}

pub fn hitting_time(g: &WeightedGraph, x: Vertex, target: &[Vertex]) -> Result<f64> {
    check_vertices(g, &[x])?;
    Ok(hitting_times(g, target)?[x])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommuteTime {
    /// `E^y T_z + E^z T_y` from two hitting-time solves.
    pub hitting_sum: f64,
    /// `V(G) R_eff(y, z)`.
    pub identity: f64,
}

impl CommuteTime {
    pub fn relative_residual(&self) -> f64 {
        (self.hitting_sum - self.identity).abs() / self.identity.abs().max(f64::MIN_POSITIVE)
    }
}

pub fn commute_time(g: &WeightedGraph, y: Vertex, z: Vertex) -> Result<CommuteTime> {
    if y == z {
        return Err(PotentialError::SameVertex);
    }
    let hitting_sum = hitting_time(g, y, &[z])? + hitting_time(g, z, &[y])?;
    let identity = g.total_volume() * effective_resistance_pair(g, y, z)?;
    Ok(CommuteTime { hitting_sum, identity })
}

/// Electric flow `i_h(a) = sum_y c_ay (h(y) - h(a))`.
pub fn flow(g: &WeightedGraph, h: &[f64], a: Vertex) -> Result<f64> {
    check_len(g, h)?;
    check_vertices(g, &[a])?;
    Ok(g.neighbors(a).iter().map(|&(y, c)| c * (h[y] - h[a])).sum())
}

/// Boundary-to-boundary conductances from harmonic elimination of the interior.
#[derive(Debug, Clone)]
pub struct TraceNetwork {
    pub boundary: Vec<Vertex>,
    /// `c_hat[(a, b)] = sum_y c_ay h^b(y)`, indexed by boundary positions.
    pub c_hat: DMatrix<f64>,
    /// Weights `c_a` of the boundary vertices.
    pub weights: Vec<f64>,
    /// Harmonic basis `h^b` over all vertices, one per boundary vertex.
    pub basis: Vec<Vec<f64>>,
}

impl TraceNetwork {
    /// Transition kernel `c_hat(a, b) / c_a`.
    pub fn kernel(&self) -> DMatrix<f64> {
        let mut p = self.c_hat.clone();
        for (i, &w) in self.weights.iter().enumerate() {
            p.row_mut(i).scale_mut(1.0 / w);
        }
        p
    }

    /// `max_a |sum_b c_hat(a, b) - c_a|`.
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.boundary.len())
            .map(|i| (self.c_hat.row(i).sum() - self.weights[i]).abs())
            .fold(0.0, f64::max)
    }

    /// `max_y |sum_b h^b(y) - 1|`.
    pub fn partition_of_unity_residual(&self) -> f64 {
        let n = self.basis.first().map_or(0, Vec::len);
        (0..n)
            .map(|y| (self.basis.iter().map(|h| h[y]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `1/2 sum_{a, b} c_hat(a, b) (g(a) - g(b))^2` for `g` indexed by boundary position.
    pub fn energy(&self, values: &[f64]) -> f64 {
        let k = self.boundary.len();
        let mut total = 0.0;
        for a in 0..k {
            for b in 0..k {
                total += self.c_hat[(a, b)] * (values[a] - values[b]).powi(2);
            }
        }
        0.5 * total
    }

    /// Harmonic extension `sum_b g(b) h^b`.
    pub fn extend(&self, values: &[f64]) -> Vec<f64> {
        let n = self.basis.first().map_or(0, Vec::len);
        let mut out = vec![0.0; n];
        for (h, &v) in self.basis.iter().zip(values) {
            for (o, &hv) in out.iter_mut().zip(h) {
                *o += v * hv;
            }
        }
        out
    }

    /// Flow out of boundary position `a` for the harmonic extension of `values`.
    pub fn flow(&self, values: &[f64], a: usize) -> f64 {
        (0..self.boundary.len()).map(|b| self.c_hat[(a, b)] * (values[b] - values[a])).sum()
    }
}

fn check_no_boundary_edges(g: &WeightedGraph, boundary: &[bool]) -> Result<()> {
    for &(u, v, _) in g.edges() {
        if boundary[u] && boundary[v] {
            return Err(PotentialError::BoundaryEdgePresent(u, v));
        }
    }
    Ok(())
}

pub fn trace_network(g: &WeightedGraph, boundary: &[Vertex]) -> Result<TraceNetwork> {
    if boundary.is_empty() {
        return Err(PotentialError::EmptyBoundary);
    }
    check_vertices(g, boundary)?;
    let mut bset = boundary.to_vec();
    bset.sort_unstable();
    bset.dedup();
    let absorbing = mask(g, &bset);
    if absorbing.iter().all(|&b| b) {
        return Err(PotentialError::ComplementEmpty);
    }
    check_no_boundary_edges(g, &absorbing)?;
    let solver = KilledLaplacian::new(g, &absorbing)?;
    let k = bset.len();
    let mut basis = Vec::with_capacity(k);
    for &b in &bset {
        let mut values = vec![0.0; g.vertex_count()];
        values[b] = 1.0;
        basis.push(solver.extend(g, &values)?);
    }
    let mut c_hat = DMatrix::zeros(k, k);
    for (i, &a) in bset.iter().enumerate() {
        for (j, h) in basis.iter().enumerate() {
            c_hat[(i, j)] = g.neighbors(a).iter().map(|&(y, c)| c * h[y]).sum();
        }
    }
    let weights = bset.iter().map(|&a| g.weight(a)).collect();
    Ok(TraceNetwork { boundary: bset, c_hat, weights, basis })
}

/// One-site stationary marginal of the boundary-driven process.
#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub rho: Vec<f64>,
    /// Solution of the Dirichlet-to-Neumann formulation.
    pub rho_dtn: Vec<f64>,
    /// `sup |rho - rho_dtn|`.
    pub agreement: f64,
    /// Max residual of the Robin system.
    pub residual: f64,
    /// `i_rho(a)` per boundary vertex, in boundary order.
    pub flows: Vec<f64>,
    pub energy: f64,
    /// `(1 / (1 + gamma), gamma / (1 + gamma))`.
    pub bounds: (f64, f64),
}

impl DensityProfile {
    /// How far `rho` leaves the density bounds (0 when inside).
    pub fn bound_violation(&self) -> f64 {
        let (lo, hi) = self.bounds;
        self.rho.iter().map(|&r| (lo - r).max(r - hi)).fold(0.0, f64::max)
    }
}

/// Agreement threshold between the two formulations.
pub const DUALITY_TOL: f64 = 1e-8;

/// Solves the Robin system `(L + diag(lambda_+ + lambda_-)) rho = lambda_+`
/// and, independently, the reduced boundary system built from the trace network.
pub fn stationary_marginal(g: &WeightedGraph, spec: &BoundarySpec) -> Result<DensityProfile> {
    let n = g.vertex_count();
    let mut m = SparseSym::new(n);
    for x in 0..n {
        m.add(x, x, g.weight(x));
    }
    for &(u, v, c) in g.edges() {
        m.add(u, v, -c);
    }
    let mut rhs = vec![0.0; n];
    for (a, lp, lm) in spec.iter() {
        m.add(a, a, lp + lm);
        rhs[a] = lp;
    }
    let solver = SpdSolver::new(m)?;
    let densities = spec.reservoir_densities();
    let rho = if densities.iter().all(|&d| d == densities[0]) {
        // Every reservoir agrees, so the constant is the exact solution.
        vec![densities[0]; n]
    } else {
        solver.solve(&rhs)?
    };
    let residual = solver.residual(&rho, &rhs);

    let net = trace_network(g, spec.vertices())?;
    let k = spec.len();
    let mut reduced = DMatrix::zeros(k, k);
    let mut b = DVector::zeros(k);
    for (i, (a, lp, lm)) in spec.iter().enumerate() {
        for j in 0..k {
            reduced[(i, j)] = -net.c_hat[(i, j)];
        }
        reduced[(i, i)] += g.weight(a) + lp + lm;
        b[i] = lp;
    }
    let boundary_rho = reduced
        .lu()
        .solve(&b)
        .ok_or(PotentialError::Linalg(LinalgError::NotPositiveDefinite { row: 0, pivot: 0.0 }))?;
    let rho_dtn = net.extend(boundary_rho.as_slice());

    let agreement = rho.iter().zip(&rho_dtn).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if agreement > DUALITY_TOL {
        return Err(PotentialError::InconsistentSolutions(agreement));
    }
    let flows = spec.vertices().iter().map(|&a| flow(g, &rho, a)).collect::<Result<Vec<_>>>()?;
    let gamma = spec.gamma();
    let profile = DensityProfile {
        energy: dirichlet_energy(g, &rho)?,
        rho,
        rho_dtn,
        agreement,
        residual,
        flows,
        bounds: (1.0 / (1.0 + gamma), gamma / (1.0 + gamma)),
    };
    // Equality cases (a single reservoir at the extreme ratio) sit on the
    // bound, so allow a few ulps of rounding.
    let violation = profile.bound_violation();
    if violation > 1e-12 {
        return Err(PotentialError::DensityBounds(violation));
    }
    Ok(profile)
}
