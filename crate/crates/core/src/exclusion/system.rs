//! Transition structure of an exclusion system.

use super::{BoundarySpec, Configuration};
use crate::graph::{Vertex, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    Swap(Vertex, Vertex),
    Flip(Vertex),
}

/// Swap edges `(x, y, rate)` plus reservoir flips `(a, lambda_plus, lambda_minus)`.
///
/// Swap rates need not come from a graph; the two-block generator uses
/// bridge swaps between arbitrary sites.
#[derive(Debug, Clone)]
pub struct ExclusionSystem {
    n_sites: usize,
    swaps: Vec<(Vertex, Vertex, f64)>,
    flips: Vec<(Vertex, f64, f64)>,
    touching: Vec<Vec<usize>>,
}

impl ExclusionSystem {
    pub fn new(n_sites: usize, swaps: Vec<(Vertex, Vertex, f64)>, flips: Vec<(Vertex, f64, f64)>) -> Self {
        let mut touching = vec![Vec::new(); n_sites];
        for (i, &(x, y, _)) in swaps.iter().enumerate() {
            touching[x].push(i);
            touching[y].push(i);
        }
        for (j, &(a, _, _)) in flips.iter().enumerate() {
            touching[a].push(swaps.len() + j);
        }
        Self { n_sites, swaps, flips, touching }
    }

    pub fn from_graph(g: &WeightedGraph, spec: Option<&BoundarySpec>) -> Self {
        let flips = spec.map(|s| s.iter().collect()).unwrap_or_default();
        Self::new(g.vertex_count(), g.edges().to_vec(), flips)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn swaps(&self) -> &[(Vertex, Vertex, f64)] {
        &self.swaps
    }

    pub fn flips(&self) -> &[(Vertex, f64, f64)] {
        &self.flips
    }

    pub fn is_conservative(&self) -> bool {
        self.flips.is_empty()
    }

    pub fn transition_count(&self) -> usize {
        self.swaps.len() + self.flips.len()
    }

    pub fn transition(&self, i: usize) -> Transition {
        if i < self.swaps.len() {
            Transition::Swap(self.swaps[i].0, self.swaps[i].1)
        } else {
            Transition::Flip(self.flips[i - self.swaps.len()].0)
        }
    }

    /// Transitions whose rate may change when `site` changes.
    pub fn touching(&self, site: Vertex) -> &[usize] {
        &self.touching[site]
    }

    /// Rate of transition `i` in configuration `eta`.
    pub fn rate(&self, i: usize, eta: &Configuration) -> f64 {
        if i < self.swaps.len() {
            let (x, y, c) = self.swaps[i];
            if eta.get(x) != eta.get(y) {
                c
            } else {
                0.0
            }
        } else {
            let (a, lp, lm) = self.flips[i - self.swaps.len()];
            if eta.get(a) {
                lm
            } else {
                lp
            }
        }
    }

    pub fn apply(&self, i: usize, eta: &mut Configuration) {
        match self.transition(i) {
            Transition::Swap(x, y) => eta.swap(x, y),
            Transition::Flip(a) => eta.flip(a),
        }
    }

    /// Transitions with positive rate in `eta`, with their rates.
    pub fn active_rates(&self, eta: &Configuration) -> Vec<(Transition, f64)> {
        (0..self.transition_count())
            .filter_map(|i| {
                let r = self.rate(i, eta);
                (r > 0.0).then(|| (self.transition(i), r))
            })
            .collect()
    }
}
