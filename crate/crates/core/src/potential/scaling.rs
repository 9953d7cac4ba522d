//! Volume and time scales along an exhaustion, with log-log exponent fits.

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::{effective_resistance, effective_resistance_pair, exit_times, PotentialError, Result};
use crate::graph::{GraphExhaustion, Vertex, WeightedGraph};
use crate::rng::labelled_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VolumeMode {
    /// `V(B(o, r_N))`, the sum of vertex weights.
    Measure,
    /// `|B(o, r_N)|`.
    Count,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExitMode {
    /// Largest mean exit time over starting points in the ball.
    Max,
    /// Mean exit time from the origin only.
    Origin,
}

#[derive(Debug, Clone)]
pub struct ScalingOptions {
    pub volume_mode: VolumeMode,
    pub exit_mode: ExitMode,
    pub eps: Vec<f64>,
    /// Random probe pairs per level and eps, on top of the farthest pair.
    pub random_pairs: usize,
    pub seed: u64,
    /// Number of trailing levels used by the exponent fits.
    pub fit_levels: usize,
    /// Radius multiplier of the resistance-growth probe.
    pub sr_factor: usize,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            volume_mode: VolumeMode::Measure,
            exit_mode: ExitMode::Max,
            eps: vec![0.5],
            random_pairs: 8,
            seed: 0,
            fit_levels: 3,
            sr_factor: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeStat {
    pub eps: f64,
    pub y: Vertex,
    pub z: Vertex,
    pub r_eff: f64,
    /// `(T_N / V_N) / R_eff(y, z)` in the level graph.
    pub stat: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelScaling {
    pub level: usize,
    pub radius: usize,
    pub volume: f64,
    pub cardinality: usize,
    pub exit_time: f64,
    pub origin_exit_time: f64,
    /// `T_N / V_N`.
    pub ratio: f64,
    pub probes: Vec<ProbeStat>,
    /// Smallest probe statistic, if the inner ball has two vertices.
    pub worst_probe: Option<f64>,
    /// `T(o, r) / (V(B(o, r)) R_eff(o, B(o, r)^c))`.
    pub einstein: f64,
    /// `R_eff(o, B(o, M r)^c) / R_eff(o, B(o, r)^c)`, absent when the larger ball fills the graph.
    pub sr_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub rms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub levels: Vec<LevelScaling>,
    /// Volume growth exponent fitted on `log V_N` against `log r_N`.
    pub alpha: LinearFit,
    /// Time growth exponent fitted on `log T_N` against `log r_N`.
    pub beta: LinearFit,
}

impl ScalingReport {
    /// `T_N / V_N` strictly increasing over the levels whose ball has more
    /// than one vertex.
    pub fn ratio_increasing(&self) -> bool {
        let nontrivial: Vec<f64> = self.levels.iter().filter(|l| l.cardinality > 1).map(|l| l.ratio).collect();
        nontrivial.windows(2).all(|w| w[0] < w[1])
    }
}

/// Least-squares line through `(x, y)`.
pub fn fit_line(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rms = (points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    LinearFit { slope, intercept, rms }
}

fn complement(g: &WeightedGraph, set: &[Vertex]) -> Vec<Vertex> {
    let mut inside = vec![false; g.vertex_count()];
    for &v in set {
        inside[v] = true;
    }
    (0..g.vertex_count()).filter(|&v| !inside[v]).collect()
}

fn farthest_pair(g: &WeightedGraph, set: &[Vertex]) -> (Vertex, Vertex) {
    let mut best = (0, set[0], set[0]);
    for &y in set {
        let d = g.distances_from(y);
        for &z in set {
            if d[z] != usize::MAX && d[z] > best.0 {
                best = (d[z], y, z);
            }
        }
    }
    (best.1, best.2)
}

pub fn scaling_report(ex: &GraphExhaustion, opts: &ScalingOptions) -> Result<ScalingReport> {
    let count = ex.levels.len();
    if count < 3 {
        return Err(PotentialError::TooFewLevels(count));
    }
    let levels: Vec<LevelScaling> = (0..count)
        .into_par_iter()
        .map(|n| level_scaling(ex, n, opts))
        .collect::<Result<_>>()?;
    let fit_from = count.saturating_sub(opts.fit_levels.max(2));
    let log_r = |l: &LevelScaling| (l.radius as f64).ln();
    let alpha = fit_line(&levels[fit_from..].iter().map(|l| (log_r(l), l.volume.ln())).collect::<Vec<_>>());
    let beta = fit_line(&levels[fit_from..].iter().map(|l| (log_r(l), l.exit_time.ln())).collect::<Vec<_>>());
    Ok(ScalingReport { levels, alpha, beta })
}

/// `(V_N, T_N)` for level `n`: the attached scale table if present, otherwise
/// the ball volume and exit time measured in the mother graph.
pub fn level_scales(ex: &GraphExhaustion, n: usize, volume_mode: VolumeMode, exit_mode: ExitMode) -> Result<(f64, f64)> {
    if let Some(table) = &ex.scales {
        return Ok(table[n]);
    }
    let ball = &ex.levels[n].to_mother;
    let times = exit_times(&ex.mother, ball)?;
    Ok((measured_volume(ex, n, volume_mode), measured_exit(&times, ball, ex.origin, exit_mode)))
}

fn measured_volume(ex: &GraphExhaustion, n: usize, mode: VolumeMode) -> f64 {
    let ball = &ex.levels[n].to_mother;
    match mode {
        VolumeMode::Measure => ex.mother.volume(ball),
        VolumeMode::Count => ball.len() as f64,
    }
}

fn measured_exit(times: &[f64], ball: &[Vertex], origin: Vertex, mode: ExitMode) -> f64 {
    match mode {
        ExitMode::Max => ball.iter().map(|&x| times[x]).fold(0.0, f64::max),
        ExitMode::Origin => times[origin],
    }
}

fn level_scaling(ex: &GraphExhaustion, n: usize, opts: &ScalingOptions) -> Result<LevelScaling> {
    let mother = &ex.mother;
    let level = &ex.levels[n];
    let ball = &level.to_mother;
    let times = exit_times(mother, ball)?;
    let origin_exit_time = times[ex.origin];
    let (volume, exit_time) = match &ex.scales {
        Some(table) => table[n],
        None => (measured_volume(ex, n, opts.volume_mode), measured_exit(&times, ball, ex.origin, opts.exit_mode)),
    };
    let ratio = exit_time / volume;

    let outside = complement(mother, ball);
    let r_out = effective_resistance(mother, &[ex.origin], &outside)?;
    let einstein = origin_exit_time / (mother.volume(ball) * r_out);
    let big_radius = level.radius * opts.sr_factor.max(1);
    let big_ball = mother.ball(ex.origin, big_radius)?;
    let big_outside = complement(mother, &big_ball);
    let sr_ratio = if big_outside.is_empty() {
        None
    } else {
        Some(effective_resistance(mother, &[ex.origin], &big_outside)? / r_out)
    };

    let g = &level.graph;
    let mut probes = Vec::new();
    for &eps in &opts.eps {
        let k = ex.eps_index(eps, n).min(n);
        let inner = g.ball(level.origin, ex.radii[k])?;
        if inner.len() < 2 {
            continue;
        }
        let mut pairs = vec![farthest_pair(g, &inner)];
        let mut rng = labelled_rng(opts.seed, &format!("probe-pairs/{n}/{eps}"));
        for _ in 0..opts.random_pairs {
            let picked: Vec<Vertex> = inner.choose_multiple(&mut rng, 2).copied().collect();
            pairs.push((picked[0], picked[1]));
        }
        for (y, z) in pairs {
            let r = effective_resistance_pair(g, y, z)?;
            probes.push(ProbeStat { eps, y: level.to_mother[y], z: level.to_mother[z], r_eff: r, stat: ratio / r });
        }
    }
    let worst_probe = probes.iter().map(|p| p.stat).reduce(f64::min);
    Ok(LevelScaling {
        level: n,
        radius: level.radius,
        volume,
        cardinality: ball.len(),
        exit_time,
        origin_exit_time,
        ratio,
        probes,
        worst_probe,
        einstein,
        sr_ratio,
    })
}
