//! Monte Carlo exceedance estimates for time-integrated local fields.

use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Anchor, Bundle, ExceedanceEstimate, GlobalAverage, HarnessError, Result};
use crate::exclusion::{simulate, BoundarySpec, Configuration, ExclusionSystem, Observer, SimOptions, Transition};
use crate::graph::{generate, path_exhaustion, sg_exhaustion, Family, GraphExhaustion, Vertex, WeightedGraph};
use crate::potential::{hitting_times, level_scales, stationary_marginal, ExitMode, VolumeMode};
use crate::rng::{stream_rng, RNG_ALGORITHM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialState {
    /// Independent sites drawn from the product measure.
    Sampled,
    /// The sites nearest the origin filled to the target density.
    Packed,
}

/// The weight `G(t)` in the boundary statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeWeight {
    Constant,
    /// `G(t) = t / T`.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExhaustionFamily {
    Sg,
    Path,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub family: ExhaustionFamily,
    pub levels: Vec<usize>,
    pub eps: Vec<f64>,
    /// Level index of the block radius `r_j`.
    pub block_level: usize,
    pub bundle: Bundle,
    pub threshold: f64,
    pub horizon: f64,
    pub alpha: f64,
    pub trajectories: u64,
    pub seed: u64,
    pub confidence: f64,
    /// Probe every vertex instead of the default three.
    pub all_probes: bool,
    pub initial: InitialState,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: ExhaustionFamily::Sg,
            levels: vec![2, 3, 4],
            eps: vec![0.5],
            block_level: 0,
            bundle: Bundle::Occupation,
            threshold: 0.1,
            horizon: 1.0,
            alpha: 0.5,
            trajectories: 1000,
            seed: 0,
            confidence: 0.95,
            all_probes: false,
            initial: InitialState::Sampled,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::InvalidConfig(msg));
        if self.trajectories == 0 {
            return Err(HarnessError::InsufficientTrajectories);
        }
        if self.levels.is_empty() || self.levels.contains(&0) {
            return bad("levels must be nonempty and positive".into());
        }
        if self.eps.is_empty() {
            return bad("eps list is empty".into());
        }
        if let Some(e) = self.eps.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
            return bad(format!("eps = {e} is outside (0, 1]"));
        }
        if !(self.threshold > 0.0) {
            return bad(format!("threshold = {} must be positive", self.threshold));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon = {} must be positive", self.horizon));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha = {} is outside (0, 1)", self.alpha));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!("confidence = {} is outside (0, 1)", self.confidence));
        }
        for &n in &self.levels {
            for &e in &self.eps {
                let k = crate::graph::eps_index(e, n).min(n);
                if self.block_level >= k {
                    return bad(format!("block level {} is not inside the eps ball at N = {n}, eps = {e}", self.block_level));
                }
            }
        }
        Ok(())
    }

    fn exhaustion(&self) -> Result<GraphExhaustion> {
        let top = *self.levels.iter().max().expect("validated");
        Ok(match self.family {
            ExhaustionFamily::Sg => sg_exhaustion(top)?,
            ExhaustionFamily::Path => path_exhaustion(top)?,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    /// Mother-graph vertex.
    pub vertex: Vertex,
    pub ball_size: usize,
    pub block_size: usize,
    pub exceedances: u64,
    pub mean_integral: f64,
    pub mean_u1: f64,
    pub mean_u2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub level: usize,
    pub eps: f64,
    pub eps_index: usize,
    pub sites: usize,
    pub volume: f64,
    pub time_scale: f64,
    pub probes: Vec<ProbeRow>,
    /// Probe with the most exceedances.
    pub worst_probe: Vertex,
    pub estimate: ExceedanceEstimate,
    /// `-ln(estimate or bound) / V_N`.
    pub curve: f64,
    /// Largest `|int U - int U1 - int U2|` over trajectories and probes.
    pub decomposition_residual: f64,
    pub mean_events: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rng: &'static str,
    pub rows: Vec<ExperimentRow>,
}

impl ExperimentReport {
    /// The estimate (or bound) strictly decreases along the levels at fixed `eps`.
    pub fn decreasing_in_level(&self, eps: f64) -> bool {
        let values: Vec<f64> = self.rows.iter().filter(|r| r.eps == eps).map(|r| r.estimate.value()).collect();
        values.len() >= 2 && values.windows(2).all(|w| w[1] < w[0])
    }
}

/// The origin, the deepest other vertex, and the boundary-layer vertex farthest from
/// the origin (local indices of level `n`).
pub fn select_probes(ex: &GraphExhaustion, n: usize) -> Vec<Vertex> {
    let level = &ex.levels[n];
    let g = &level.graph;
    let inside: std::collections::HashSet<Vertex> = level.to_mother.iter().copied().collect();
    let mut layer: Vec<Vertex> = (0..g.vertex_count())
        .filter(|&v| ex.mother.neighbors(level.to_mother[v]).iter().any(|(w, _)| !inside.contains(w)))
        .collect();
    let from_origin = g.distances_from(level.origin);
    if layer.is_empty() {
        let far = from_origin.iter().copied().max().unwrap_or(0);
        layer = (0..g.vertex_count()).filter(|&v| from_origin[v] == far).collect();
    }
    let mut depth = vec![usize::MAX; g.vertex_count()];
    let mut queue = VecDeque::new();
    for &v in &layer {
        depth[v] = 0;
        queue.push_back(v);
    }
    while let Some(u) = queue.pop_front() {
        for &(w, _) in g.neighbors(u) {
            if depth[w] == usize::MAX {
                depth[w] = depth[u] + 1;
                queue.push_back(w);
            }
        }
    }
    let deep = (0..g.vertex_count())
        .filter(|&v| v != level.origin)
        .max_by_key(|&v| (depth[v], std::cmp::Reverse(v)))
        .unwrap_or(level.origin);
    let near = *layer.iter().max_by_key(|&&v| (from_origin[v], std::cmp::Reverse(v))).expect("nonempty layer");
    let mut probes = vec![level.origin];
    for v in [deep, near] {
        if !probes.contains(&v) {
            probes.push(v);
        }
    }
    probes
}

/// Tracks particle counts of fixed vertex sets along a path.
struct SetCounts {
    members: Vec<Vec<bool>>,
    counts: Vec<usize>,
}

impl SetCounts {
    fn new(n: usize, sets: &[Vec<Vertex>], eta: &Configuration) -> Self {
        let members: Vec<Vec<bool>> = sets
            .iter()
            .map(|s| {
                let mut m = vec![false; n];
                for &v in s {
                    m[v] = true;
                }
                m
            })
            .collect();
        let counts = sets.iter().map(|s| s.iter().filter(|&&v| eta.get(v)).count()).collect();
        Self { members, counts }
    }

    fn update(&mut self, transition: Transition, eta: &Configuration) {
        let sites: &[Vertex] = match transition {
            Transition::Swap(x, y) => &[x, y],
            Transition::Flip(a) => &[a],
        };
        for (m, c) in self.members.iter().zip(&mut self.counts) {
            for &s in sites {
                if m[s] {
                    if eta.get(s) {
                        *c += 1;
                    } else {
                        *c -= 1;
                    }
                }
            }
        }
    }
}

struct Field {
    anchor: Anchor,
    block_set: usize,
    ball_set: usize,
    block_table: Vec<f64>,
    ball_table: Vec<f64>,
}

struct FieldObserver<'a> {
    g: &'a WeightedGraph,
    bundle: Bundle,
    fields: &'a [Field],
    sets: SetCounts,
    /// `(int U, int U1, int U2)` per field.
    integrals: Vec<[f64; 3]>,
}

impl Observer for FieldObserver<'_> {
    fn hold(&mut self, eta: &Configuration, from: f64, to: f64) {
        let dt = to - from;
        for (f, acc) in self.fields.iter().zip(&mut self.integrals) {
            let phi = self.bundle.evaluate(self.g, f.anchor, eta);
            let block_avg = f.block_table[self.sets.counts[f.block_set]];
            let ball_avg = f.ball_table[self.sets.counts[f.ball_set]];
            acc[0] += (phi - ball_avg) * dt;
            acc[1] += (phi - block_avg) * dt;
            acc[2] += (block_avg - ball_avg) * dt;
        }
    }

    fn jump(&mut self, _t: f64, transition: Transition, eta: &Configuration) {
        self.sets.update(transition, eta);
    }
}

fn initial_state<R: Rng>(g: &WeightedGraph, origin: Vertex, density: &[f64], mode: InitialState, rng: &mut R) -> Configuration {
    let n = g.vertex_count();
    match mode {
        InitialState::Sampled => Configuration::from_bools(&(0..n).map(|x| rng.random::<f64>() < density[x]).collect::<Vec<_>>()),
        InitialState::Packed => {
            let target = (density.iter().sum::<f64>()).round() as usize;
            let mut eta = Configuration::empty(n);
            for &v in g.ball_bfs_order(origin, n + 1).iter().take(target) {
                eta.set(v, true);
            }
            eta
        }
    }
}

/// Estimates `P[|int_0^T U_{N,eps}(p, eta_t) dt| > threshold]` for the
/// configured levels, eps values and probes, running the exclusion process on
/// each level graph at speed `T_N`.
pub fn ergodicity_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let ex = config.exhaustion()?;
    let mut rows = Vec::new();
    for &n in &config.levels {
        let level = &ex.levels[n];
        let g = &level.graph;
        let sites = g.vertex_count();
        let (volume, time_scale) = level_scales(&ex, n, VolumeMode::Measure, ExitMode::Max)?;
        let probes = if config.all_probes { (0..sites).collect() } else { select_probes(&ex, n) };

        let mut sets: Vec<Vec<Vertex>> = Vec::new();
        let mut intern = |set: Vec<Vertex>| -> usize {
            if let Some(i) = sets.iter().position(|s| *s == set) {
                return i;
            }
            sets.push(set);
            sets.len() - 1
        };
        let mut fields = Vec::new();
        let mut layout = Vec::new();
        for (ei, &eps) in config.eps.iter().enumerate() {
            let k = ex.eps_index(eps, n).min(n);
            for &p in &probes {
                let anchor = if config.bundle.is_edge() {
                    Anchor::Edge(p, g.neighbors(p)[0].0)
                } else {
                    Anchor::Vertex(p)
                };
                let average = GlobalAverage::new(g, config.bundle, anchor)?;
                let block = g.ball(p, ex.radii[config.block_level])?;
                let ball = g.ball(p, ex.radii[k])?;
                let (block_len, ball_len) = (block.len(), ball.len());
                fields.push(Field {
                    anchor,
                    block_table: average.table(block_len),
                    ball_table: average.table(ball_len),
                    block_set: intern(block),
                    ball_set: intern(ball),
                });
                layout.push((ei, k, p, block_len, ball_len));
            }
        }

        let sys = ExclusionSystem::from_graph(g, None);
        let density = vec![config.alpha; sites];
        let opts = SimOptions { time_scale, horizon: config.horizon, record_events: false };
        let label = format!("experiment/{n}");
        let outcomes: Vec<(Vec<[f64; 3]>, u64)> = (0..config.trajectories)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(config.seed, &label, i);
                let eta0 = initial_state(g, level.origin, &density, config.initial, &mut rng);
                let mut obs = FieldObserver {
                    g,
                    bundle: config.bundle,
                    fields: &fields,
                    sets: SetCounts::new(sites, &sets, &eta0),
                    integrals: vec![[0.0; 3]; fields.len()],
                };
                let tr = simulate(&sys, &eta0, opts, &mut obs, &mut rng)?;
                Ok((obs.integrals, tr.event_count))
            })
            .collect::<Result<_>>()?;

        let m = config.trajectories as f64;
        let mean_events = outcomes.iter().map(|o| o.1 as f64).sum::<f64>() / m;
        for (ei, &eps) in config.eps.iter().enumerate() {
            let mut probe_rows = Vec::new();
            let mut residual = 0.0f64;
            let mut eps_index = 0;
            for (fi, &(e, k, p, block_size, ball_size)) in layout.iter().enumerate() {
                if e != ei {
                    continue;
                }
                eps_index = k;
                let mut row = ProbeRow {
                    vertex: level.to_mother[p],
                    ball_size,
                    block_size,
                    exceedances: 0,
                    mean_integral: 0.0,
                    mean_u1: 0.0,
                    mean_u2: 0.0,
                };
                for (integrals, _) in &outcomes {
                    let [u, u1, u2] = integrals[fi];
                    if u.abs() > config.threshold {
                        row.exceedances += 1;
                    }
                    row.mean_integral += u / m;
                    row.mean_u1 += u1 / m;
                    row.mean_u2 += u2 / m;
                    residual = residual.max((u - u1 - u2).abs());
                }
                probe_rows.push(row);
            }
            let worst = probe_rows
                .iter()
                .fold(&probe_rows[0], |best, r| if r.exceedances > best.exceedances { r } else { best });
            let estimate = ExceedanceEstimate::new(worst.exceedances, config.trajectories, config.confidence);
            rows.push(ExperimentRow {
                level: n,
                eps,
                eps_index,
                sites,
                volume,
                time_scale,
                worst_probe: worst.vertex,
                curve: -estimate.value().ln() / volume,
                estimate,
                probes: probe_rows,
                decomposition_residual: residual,
                mean_events,
            });
        }
    }
    Ok(ExperimentReport { config: config.clone(), rng: RNG_ALGORITHM, rows })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryExperimentConfig {
    /// Gasket levels; the reservoirs sit at the three corners.
    pub levels: Vec<usize>,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub weight: TimeWeight,
    pub threshold: f64,
    pub horizon: f64,
    pub trajectories: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl Default for BoundaryExperimentConfig {
    fn default() -> Self {
        Self {
            levels: vec![1, 2, 3],
            lambda_plus: 1.0,
            lambda_minus: 1.0,
            weight: TimeWeight::Constant,
            threshold: 0.1,
            horizon: 1.0,
            trajectories: 1000,
            seed: 0,
            confidence: 0.95,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryRow {
    pub level: usize,
    pub sites: usize,
    pub time_scale: f64,
    pub vertex: Vertex,
    pub reservoir_density: f64,
    /// Sample mean of `int G(t) (eta_t(a) - reservoir density) dt`.
    pub mean: f64,
    pub std_error: f64,
    /// `mean / std_error` (0 when both vanish).
    pub z_score: f64,
    pub estimate: ExceedanceEstimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryReport {
    pub config: BoundaryExperimentConfig,
    pub rng: &'static str,
    pub rows: Vec<BoundaryRow>,
}

struct BoundaryObserver<'a> {
    boundary: &'a [Vertex],
    centre: &'a [f64],
    weight: TimeWeight,
    horizon: f64,
    integrals: Vec<f64>,
}

impl Observer for BoundaryObserver<'_> {
    fn hold(&mut self, eta: &Configuration, from: f64, to: f64) {
        let w = match self.weight {
            TimeWeight::Constant => to - from,
            TimeWeight::Linear => (to * to - from * from) / (2.0 * self.horizon),
        };
        for ((acc, &a), &c) in self.integrals.iter_mut().zip(self.boundary).zip(self.centre) {
            *acc += w * (eta.occupancy(a) - c);
        }
    }
}

/// Time-weighted boundary occupation statistic on gasket cells with
/// reservoirs at the corners, started from the product measure of the
/// stationary density profile.
pub fn boundary_experiment(config: &BoundaryExperimentConfig) -> Result<BoundaryReport> {
    if config.trajectories < 2 {
        return Err(HarnessError::InsufficientTrajectories);
    }
    if config.levels.is_empty() || config.levels.contains(&0) {
        return Err(HarnessError::InvalidConfig("levels must be nonempty and positive".into()));
    }
    if !(config.threshold > 0.0 && config.horizon > 0.0) {
        return Err(HarnessError::InvalidConfig("threshold and horizon must be positive".into()));
    }
    let mut rows = Vec::new();
    for &n in &config.levels {
        let fam = generate(Family::Sg(n), crate::graph::DEFAULT_VERTEX_BUDGET)?;
        let g = &fam.graph;
        let entries: Vec<(Vertex, f64, f64)> = fam.corners.iter().map(|&a| (a, config.lambda_plus, config.lambda_minus)).collect();
        let spec = BoundarySpec::new(g, &entries)?;
        let profile = stationary_marginal(g, &spec)?;
        let time_scale = hitting_times(g, spec.vertices())?.into_iter().fold(0.0, f64::max);
        let centre = spec.reservoir_densities();
        let sys = ExclusionSystem::from_graph(g, Some(&spec));
        let opts = SimOptions { time_scale, horizon: config.horizon, record_events: false };
        let label = format!("boundary/{n}");
        let samples: Vec<Vec<f64>> = (0..config.trajectories)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(config.seed, &label, i);
                let eta0 = initial_state(g, 0, &profile.rho, InitialState::Sampled, &mut rng);
                let mut obs = BoundaryObserver {
                    boundary: spec.vertices(),
                    centre: &centre,
                    weight: config.weight,
                    horizon: config.horizon,
                    integrals: vec![0.0; spec.len()],
                };
                simulate(&sys, &eta0, opts, &mut obs, &mut rng)?;
                Ok(obs.integrals)
            })
            .collect::<Result<_>>()?;
        let m = config.trajectories as f64;
        for (i, (&a, &c)) in spec.vertices().iter().zip(&centre).enumerate() {
            let mean = samples.iter().map(|s| s[i]).sum::<f64>() / m;
            let var = samples.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / (m - 1.0);
            let std_error = (var / m).sqrt();
            let exceed = samples.iter().filter(|s| s[i].abs() > config.threshold).count() as u64;
            rows.push(BoundaryRow {
                level: n,
                sites: g.vertex_count(),
                time_scale,
                vertex: a,
                reservoir_density: c,
                mean,
                std_error,
                z_score: if std_error > 0.0 { mean / std_error } else { 0.0 },
                estimate: ExceedanceEstimate::new(exceed, config.trajectories, config.confidence),
            });
        }
    }
    Ok(BoundaryReport { config: config.clone(), rng: RNG_ALGORITHM, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig { levels: vec![2, 3], trajectories: 64, seed: 5, ..ExperimentConfig::default() }
    }

    #[test]
    fn validation() {
        assert!(small().validate().is_ok());
        let bad_eps = ExperimentConfig { eps: vec![1.5], ..small() };
        assert!(matches!(bad_eps.validate(), Err(HarnessError::InvalidConfig(_))));
        let none = ExperimentConfig { trajectories: 0, ..small() };
        assert_eq!(none.validate(), Err(HarnessError::InsufficientTrajectories));
        let nested = ExperimentConfig { block_level: 1, ..small() };
        assert!(nested.validate().is_err());
    }

    #[test]
    fn probes_on_sg() {
        let ex = sg_exhaustion(3).unwrap();
        let probes = select_probes(&ex, 3);
        assert_eq!(probes.len(), 3, "{probes:?}");
        assert_eq!(probes[0], ex.levels[3].origin);
    }

    #[test]
    fn huge_threshold_never_exceeds() {
        let cfg = ExperimentConfig { threshold: 1.5, ..small() };
        let rep = ergodicity_experiment(&cfg).unwrap();
        for row in &rep.rows {
            assert_eq!(row.estimate.exceedances, 0);
            assert!(row.estimate.upper_bound.is_some());
            assert!(row.decomposition_residual < 1e-12);
        }
    }

    #[test]
    fn deterministic_report() {
        let cfg = small();
        let a = serde_json::to_string(&ergodicity_experiment(&cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&ergodicity_experiment(&cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn incremental_counts_match_direct() {
        let ex = sg_exhaustion(2).unwrap();
        let g = &ex.levels[2].graph;
        let sets = vec![g.ball(0, 2).unwrap(), g.ball(0, 4).unwrap()];
        let sys = ExclusionSystem::from_graph(g, None);
        let mut rng = stream_rng(3, "counts", 0);
        let eta0 = initial_state(g, 0, &vec![0.5; g.vertex_count()], InitialState::Sampled, &mut rng);
        struct Check<'a> {
            sets: &'a [Vec<Vertex>],
            counts: SetCounts,
            ok: bool,
        }
        impl Observer for Check<'_> {
            fn hold(&mut self, _: &Configuration, _: f64, _: f64) {}
            fn jump(&mut self, _t: f64, tr: Transition, eta: &Configuration) {
                self.counts.update(tr, eta);
                for (s, &c) in self.sets.iter().zip(&self.counts.counts) {
                    self.ok &= s.iter().filter(|&&v| eta.get(v)).count() == c;
                }
            }
        }
        let mut check = Check { sets: &sets, counts: SetCounts::new(g.vertex_count(), &sets, &eta0), ok: true };
        let opts = SimOptions { time_scale: 10.0, horizon: 5.0, record_events: false };
        simulate(&sys, &eta0, opts, &mut check, &mut rng).unwrap();
        assert!(check.ok);
    }

    #[test]
    fn boundary_statistic_small() {
        let cfg = BoundaryExperimentConfig { levels: vec![1], trajectories: 200, seed: 2, ..Default::default() };
        let rep = boundary_experiment(&cfg).unwrap();
        assert_eq!(rep.rows.len(), 3);
        for r in &rep.rows {
            assert_eq!(r.reservoir_density, 0.5);
            assert!(r.z_score.abs() < 4.0, "{r:?}");
        }
    }
}
