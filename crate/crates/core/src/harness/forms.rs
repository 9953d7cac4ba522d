//! Dirichlet forms of exclusion dynamics as symmetric matrices, and the
//! operator inequalities between them.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::{HarnessError, Result};
use crate::exclusion::MeasureSpec;
use crate::graph::{Vertex, WeightedGraph};
use crate::potential::effective_resistance_pair;

/// Largest vertex count for the exact operator checks.
pub const FORM_STATE_CAP: usize = 12;

pub(crate) fn check_sites(n: usize) -> Result<()> {
    if n > FORM_STATE_CAP {
        return Err(HarnessError::StateSpaceTooLarge { sites: n, cap: FORM_STATE_CAP });
    }
    Ok(())
}

/// States of `{0,1}^n` grouped by particle number.
pub(crate) fn count_classes(n: usize) -> Vec<Vec<usize>> {
    let mut classes = vec![Vec::new(); n + 1];
    for s in 0usize..1 << n {
        classes[s.count_ones() as usize].push(s);
    }
    classes
}

/// `f -> (1/2) sum c nu[(f(eta^xy) - f(eta))^2]` restricted to `states` (closed
/// under the swaps), in the coordinates `g = sqrt(nu) f`.
pub fn swap_form(states: &[usize], weights: &[f64], swaps: &[(Vertex, Vertex, f64)]) -> DMatrix<f64> {
    let d = states.len();
    let mut q = DMatrix::zeros(d, d);
    for (i, &s) in states.iter().enumerate() {
        for &(x, y, c) in swaps {
            if (s >> x & 1) == (s >> y & 1) {
                continue;
            }
            let t = s ^ (1 << x) ^ (1 << y);
            let j = states.binary_search(&t).expect("states closed under swaps");
            let w = 0.5 * c * weights[i];
            q[(i, i)] += w;
            q[(j, j)] += w;
            q[(i, j)] -= w;
            q[(j, i)] -= w;
        }
    }
    let scale: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    for i in 0..d {
        for j in 0..d {
            q[(i, j)] /= scale[i] * scale[j];
        }
    }
    q
}

pub(crate) fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of a particle-conserving form, computed class by class.
/// `build` gets the sorted states of one class with their weights.
pub fn min_eigenvalue_by_count(
    n: usize,
    measure: &MeasureSpec,
    build: impl Fn(&[usize], &[f64]) -> DMatrix<f64> + Sync,
) -> f64 {
    count_classes(n)
        .par_iter()
        .map(|states| {
            let weights: Vec<f64> = states.iter().map(|&s| measure.probability(n, s)).collect();
            min_eigenvalue(build(states, &weights))
        })
        .reduce(|| f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MplCheck {
    pub x: Vertex,
    pub y: Vertex,
    pub alpha: f64,
    pub r_eff: f64,
    /// `lambda_min(R_eff(x, y) A - B_xy)`.
    pub min_eigenvalue: f64,
}

/// `lambda_min(R_eff(x,y) A - B_xy)` where `A` is the exclusion form on `g` and
/// `B_xy` the form of the single swap `xy`, both under `nu_alpha`.
pub fn mpl_psd_check(g: &WeightedGraph, x: Vertex, y: Vertex, alpha: f64) -> Result<MplCheck> {
    let n = g.vertex_count();
    check_sites(n)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(HarnessError::InvalidConfig(format!("density {alpha} is not in (0, 1)")));
    }
    let r_eff = effective_resistance_pair(g, x, y)?;
    let measure = MeasureSpec::Bernoulli(alpha);
    let min_eigenvalue = min_eigenvalue_by_count(n, &measure, |states, w| {
        swap_form(states, w, g.edges()) * r_eff - swap_form(states, w, &[(x, y, 1.0)])
    });
    Ok(MplCheck { x, y, alpha, r_eff, min_eigenvalue })
}

/// `lambda_min(A_G - A_sub)` for the forms restricted to edges inside `sub`.
pub fn dirichlet_comparison(g: &WeightedGraph, sub: &[Vertex], alpha: f64) -> Result<f64> {
    let n = g.vertex_count();
    check_sites(n)?;
    let mut inside = vec![false; n];
    for &v in sub {
        inside[v] = true;
    }
    let sub_edges: Vec<(Vertex, Vertex, f64)> = g.edges().iter().copied().filter(|e| inside[e.0] && inside[e.1]).collect();
    Ok(min_eigenvalue_by_count(n, &MeasureSpec::Bernoulli(alpha), |states, w| {
        swap_form(states, w, g.edges()) - swap_form(states, w, &sub_edges)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, DEFAULT_VERTEX_BUDGET};

    #[test]
    fn single_edge_equality() {
        let g = WeightedGraph::from_edges(&[(0, 1, 2.5)]).unwrap();
        let check = mpl_psd_check(&g, 0, 1, 0.3).unwrap();
        assert!((check.r_eff - 0.4).abs() < 1e-15);
        assert!(check.min_eigenvalue.abs() < 1e-14);
    }

    #[test]
    fn path_three_adjacent() {
        let g = generate(Family::Path(2), DEFAULT_VERTEX_BUDGET).unwrap().graph;
        let m = mpl_psd_check(&g, 0, 1, 0.5).unwrap();
        assert!(m.min_eigenvalue >= -1e-12);
        // Some direction is strictly positive: the largest eigenvalue of the difference.
        let measure = MeasureSpec::Bernoulli(0.5);
        let states: Vec<usize> = (0..8).filter(|s: &usize| s.count_ones() == 1).collect();
        let w: Vec<f64> = states.iter().map(|&s| measure.probability(3, s)).collect();
        let diff = swap_form(&states, &w, g.edges()) - swap_form(&states, &w, &[(0, 1, 1.0)]);
        assert!(diff.symmetric_eigenvalues().iter().any(|&e| e > 0.1));
    }

    #[test]
    fn far_pair_on_path_is_psd() {
        let g = generate(Family::Path(4), DEFAULT_VERTEX_BUDGET).unwrap().graph;
        let m = mpl_psd_check(&g, 0, 4, 0.3).unwrap();
        assert_eq!(m.r_eff, 4.0);
        assert!(m.min_eigenvalue >= -1e-10);
    }

    #[test]
    fn sub_block_comparison() {
        let g = generate(Family::Sg(1), DEFAULT_VERTEX_BUDGET).unwrap().graph;
        assert!(dirichlet_comparison(&g, &[0, 1, 2], 0.4).unwrap() >= -1e-12);
        assert!(dirichlet_comparison(&g, &(0..6).collect::<Vec<_>>(), 0.4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn form_matches_direct_sum() {
        let g = WeightedGraph::from_indexed(4, &[(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (0, 3, 1.5)]).unwrap();
        let measure = MeasureSpec::Bernoulli(0.3);
        let states: Vec<usize> = (0..16).filter(|s: &usize| s.count_ones() == 2).collect();
        let w: Vec<f64> = states.iter().map(|&s| measure.probability(4, s)).collect();
        let f: Vec<f64> = (0..states.len()).map(|i| (i as f64 * 1.3).sin()).collect();
        let coords = nalgebra::DVector::from_iterator(f.len(), f.iter().zip(&w).map(|(v, p)| v * p.sqrt()));
        let quad = (coords.transpose() * swap_form(&states, &w, g.edges()) * &coords)[(0, 0)];
        let mut direct = 0.0;
        for (i, &s) in states.iter().enumerate() {
            for &(x, y, c) in g.edges() {
                let t = if (s >> x & 1) != (s >> y & 1) { s ^ (1 << x) ^ (1 << y) } else { s };
                let j = states.binary_search(&t).unwrap();
                direct += 0.5 * c * w[i] * (f[j] - f[i]).powi(2);
            }
        }
        assert!((quad - direct).abs() < 1e-14);
    }
}
