//! Block partitions of a ball around a centre vertex.

use std::collections::VecDeque;

use serde::Serialize;

use super::{HarnessError, Result};
use crate::graph::{Vertex, WeightedGraph};

/// `B(p, R) = Lambda_j(p) + blocks + tail`, where every block has
/// `|Lambda_j(p)|` vertices and the tail has fewer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Partition {
    pub center: Vertex,
    /// `Lambda_j(p) = B(p, r_j)`, sorted.
    pub reference: Vec<Vertex>,
    /// `Lambda_j(y_2), ..., Lambda_j(y_L)`, each sorted.
    pub blocks: Vec<Vec<Vertex>>,
    pub tail: Vec<Vertex>,
    /// The carved ball, sorted.
    pub ball: Vec<Vertex>,
    /// Connected components of each block (reference first), each sorted by least vertex.
    pub components: Vec<Vec<Vec<Vertex>>>,
    /// Least vertex of each component, in the same layout.
    pub bridges: Vec<Vec<Vertex>>,
}

impl Partition {
    /// `L_N`, counting the reference block.
    pub fn block_count(&self) -> usize {
        self.blocks.len() + 1
    }

    pub fn block_size(&self) -> usize {
        self.reference.len()
    }

    /// Block `i` with the reference block at index 0.
    pub fn block(&self, i: usize) -> &[Vertex] {
        if i == 0 {
            &self.reference
        } else {
            &self.blocks[i - 1]
        }
    }

    /// The bridge chain `z_0, z_1, ..., z_B` joining the reference block to block `i`.
    pub fn bridge_chain(&self, i: usize) -> Vec<Vertex> {
        let mut chain = vec![self.bridges[0][0]];
        chain.extend_from_slice(&self.bridges[i]);
        chain
    }

    /// Verifies exact disjoint cover, block sizes and the tail bound.
    pub fn check(&self) -> Result<()> {
        let m = self.reference.len();
        if m == 0 || self.reference.binary_search(&self.center).is_err() {
            return Err(HarnessError::InconsistentPartition("reference block misses the centre".into()));
        }
        if let Some(b) = self.blocks.iter().find(|b| b.len() != m) {
            return Err(HarnessError::InconsistentPartition(format!("block of size {} next to reference size {m}", b.len())));
        }
        if self.tail.len() >= m {
            return Err(HarnessError::InconsistentPartition(format!("tail of size {} is not below {m}", self.tail.len())));
        }
        let mut all: Vec<Vertex> = self.reference.iter().chain(self.blocks.iter().flatten()).chain(&self.tail).copied().collect();
        all.sort_unstable();
        if all != self.ball {
            return Err(HarnessError::InconsistentPartition("parts do not cover the ball disjointly".into()));
        }
        if self.block_count() != self.ball.len() / m {
            return Err(HarnessError::InconsistentPartition("block count differs from |B| / |Lambda|".into()));
        }
        Ok(())
    }
}

/// Carves `B(p, ball_radius)` into `Lambda_j(p) = B(p, block_radius)`, equal
/// blocks taken greedily in breadth-first order, and a tail.
pub fn build_partition(g: &WeightedGraph, p: Vertex, block_radius: usize, ball_radius: usize) -> Result<Partition> {
    let reference = g.ball(p, block_radius)?;
    let ball = g.ball(p, ball_radius)?;
    let m = reference.len();
    if ball.len() / m < 2 {
        return Err(HarnessError::BallTooSmall { ball: ball.len(), block: m });
    }
    let dist = g.distances_from(p);
    let mut free = vec![false; g.vertex_count()];
    for &v in &ball {
        free[v] = true;
    }
    for &v in &reference {
        free[v] = false;
    }
    // Seeds are tried nearest-first, ties by vertex index.
    let mut order: Vec<Vertex> = ball.iter().copied().filter(|&v| free[v]).collect();
    order.sort_by_key(|&v| (dist[v], v));
    let mut remaining = order.len();
    let mut blocks = Vec::new();
    let mut cursor = 0;
    while remaining >= m {
        let mut block = Vec::with_capacity(m);
        while block.len() < m {
            while !free[order[cursor]] {
                cursor += 1;
            }
            let seed = order[cursor];
            let mut queue = VecDeque::from([seed]);
            free[seed] = false;
            while let Some(u) = queue.pop_front() {
                block.push(u);
                if block.len() == m {
                    // Unvisited queued vertices go back to the pool.
                    for v in queue.drain(..) {
                        free[v] = true;
                    }
                    break;
                }
                for &(w, _) in g.neighbors(u) {
                    if free[w] {
                        free[w] = false;
                        queue.push_back(w);
                    }
                }
            }
        }
        remaining -= m;
        block.sort_unstable();
        blocks.push(block);
    }
    let mut tail: Vec<Vertex> = order.into_iter().filter(|&v| free[v]).collect();
    tail.sort_unstable();

    let components: Vec<Vec<Vec<Vertex>>> = std::iter::once(&reference)
        .chain(&blocks)
        .map(|b| {
            let mut comps = g.components_within(b);
            for c in &mut comps {
                c.sort_unstable();
            }
            comps.sort_by_key(|c| c[0]);
            comps
        })
        .collect();
    let bridges = components.iter().map(|comps| comps.iter().map(|c| c[0]).collect()).collect();
    let partition = Partition { center: p, reference, blocks, tail, ball, components, bridges };
    partition.check()?;
    Ok(partition)
}
