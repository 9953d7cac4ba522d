//! Largest eigenvalues of diagonally perturbed exclusion generators.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::forms::check_sites;
use super::{Anchor, Bundle, GlobalAverage, HarnessError, Result};
use crate::exclusion::{
    detailed_balance_check, generator_matrix, Configuration, ExclusionSystem, Generator, MeasureSpec,
};
use crate::graph::GraphExhaustion;
use crate::potential::{level_scales, ExitMode, VolumeMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEstimate {
    /// Largest eigenvalue of `T L_sym + sign kappa V U`.
    pub lambda: f64,
    /// `lambda / (kappa V)`, absent when `kappa = 0`.
    pub normalized: Option<f64>,
    /// `sup |U|`.
    pub potential_sup: f64,
}

/// Largest eigenvalue of `time_scale * L + sign * kappa * volume * U` in
/// `L^2(weights)`. A non-reversible `L` is replaced by `(L + L^*) / 2`.
/// `weights` and `potential` are indexed like the rows of `q`.
pub fn spectral_estimate(
    q: &Generator,
    weights: &[f64],
    potential: &[f64],
    time_scale: f64,
    kappa: f64,
    volume: f64,
    sign: f64,
) -> Result<SpectralEstimate> {
    let d = q.dim();
    if weights.len() != d || potential.len() != d {
        return Err(HarnessError::InvalidConfig("weights and potential must match the generator".into()));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(HarnessError::NonSymmetrizable);
    }
    let potential_sup = potential.iter().map(|u| u.abs()).fold(0.0, f64::max);
    let total: f64 = weights.iter().sum();
    let measure = MeasureSpec::Explicit(
        (0..1usize << q.n_sites)
            .map(|s| q.states.binary_search(&s).map_or(0.0, |i| weights[i] / total))
            .collect(),
    );
    let reversible = q.states.len() == 1 << q.n_sites && detailed_balance_check(q, &measure) <= 1e-12 * q_scale(q);
    if kappa == 0.0 && reversible {
        // Constants are top eigenfunctions of a reversible generator.
        return Ok(SpectralEstimate { lambda: 0.0, normalized: None, potential_sup });
    }
    let conserving = q.rows.iter().enumerate().all(|(i, row)| {
        row.iter().all(|&(j, _)| q.states[i].count_ones() == q.states[j].count_ones())
    });
    let classes: Vec<Vec<usize>> = if conserving {
        let mut by_count = vec![Vec::new(); q.n_sites + 1];
        for (i, &s) in q.states.iter().enumerate() {
            by_count[s.count_ones() as usize].push(i);
        }
        by_count.into_iter().filter(|c| !c.is_empty()).collect()
    } else {
        vec![(0..d).collect()]
    };
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let lambda = classes
        .par_iter()
        .map(|class| {
            let m = class.len();
            let mut local = vec![usize::MAX; d];
            for (a, &i) in class.iter().enumerate() {
                local[i] = a;
            }
            let mut mat = DMatrix::<f64>::zeros(m, m);
            for (a, &i) in class.iter().enumerate() {
                mat[(a, a)] += time_scale * q.diag[i] + sign * kappa * volume * potential[i];
                for &(j, r) in &q.rows[i] {
                    let b = local[j];
                    let v = 0.5 * time_scale * r * sqrt_w[i] / sqrt_w[j];
                    mat[(a, b)] += v;
                    mat[(b, a)] += v;
                }
            }
            mat.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max)
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let normalized = (kappa != 0.0).then(|| lambda / (kappa * volume));
    Ok(SpectralEstimate { lambda, normalized, potential_sup })
}

fn q_scale(q: &Generator) -> f64 {
    q.diag.iter().map(|d| d.abs()).fold(1.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralRow {
    pub level: usize,
    pub sites: usize,
    pub volume: f64,
    pub time_scale: f64,
    pub lambda: f64,
    pub normalized: f64,
    pub potential_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralTrend {
    pub bundle: Bundle,
    pub block_level: usize,
    pub kappa: f64,
    pub sign: f64,
    pub alpha: f64,
    pub rows: Vec<SpectralRow>,
    /// `sup_k nu_{*,k}[sign U^(1)]` on the block, the large-`N` target.
    pub limit_target: f64,
    pub decreasing: bool,
    pub within_potential_bound: bool,
    pub passed: bool,
}

/// `lambda^{(1),sign} / (kappa V_N)` for the one-block field at the origin,
/// along the given exhaustion levels.
pub fn spectral_trend(
    ex: &GraphExhaustion,
    levels: &[usize],
    block_level: usize,
    bundle: Bundle,
    kappa: f64,
    sign: f64,
    alpha: f64,
) -> Result<SpectralTrend> {
    if !(kappa > 0.0) || !(alpha > 0.0 && alpha < 1.0) {
        return Err(HarnessError::InvalidConfig("need kappa > 0 and alpha in (0, 1)".into()));
    }
    let mut limit_target = f64::NEG_INFINITY;
    let rows = levels
        .iter()
        .map(|&n| {
            if n >= ex.levels.len() || block_level >= n {
                return Err(HarnessError::InvalidConfig(format!("level {n} with block level {block_level}")));
            }
            let level = &ex.levels[n];
            let g = &level.graph;
            let sites = g.vertex_count();
            check_sites(sites)?;
            let anchor = Anchor::Vertex(level.origin);
            let block = g.ball(level.origin, ex.radii[block_level])?;
            let average = GlobalAverage::new(g, bundle, anchor)?;
            if average.support.iter().any(|v| block.binary_search(v).is_err()) {
                return Err(HarnessError::InconsistentPartition("bundle support leaves the block".into()));
            }
            let m = block.len();
            limit_target = (0..=m)
                .map(|k| Ok(sign * (average.canonical(m, k)? - average.eval(k as f64 / m as f64))))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(limit_target, f64::max);
            let q = generator_matrix(&ExclusionSystem::from_graph(g, None), sites)?;
            let measure = MeasureSpec::Bernoulli(alpha);
            let weights: Vec<f64> = q.states.iter().map(|&s| measure.probability(sites, s)).collect();
            let potential: Vec<f64> = q
                .states
                .iter()
                .map(|&s| {
                    let eta = Configuration::from_index(sites, s);
                    bundle.evaluate(g, anchor, &eta) - average.eval(eta.average(&block))
                })
                .collect();
            let (volume, time_scale) = level_scales(ex, n, VolumeMode::Measure, ExitMode::Max)?;
            let est = spectral_estimate(&q, &weights, &potential, time_scale, kappa, volume, sign)?;
            Ok(SpectralRow {
                level: n,
                sites,
                volume,
                time_scale,
                lambda: est.lambda,
                normalized: est.normalized.expect("kappa > 0"),
                potential_sup: est.potential_sup,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decreasing = rows.windows(2).all(|w| w[1].normalized < w[0].normalized);
    let within_potential_bound = rows.iter().all(|r| r.normalized <= r.potential_sup * (1.0 + 1e-12));
    Ok(SpectralTrend {
        bundle,
        block_level,
        kappa,
        sign,
        alpha,
        rows,
        limit_target,
        decreasing,
        within_potential_bound,
        passed: decreasing && within_potential_bound,
    })
}
