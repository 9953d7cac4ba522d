//! The block-averaging identity for a partition into blocks and tails.

use super::{HarnessError, Partition, Result};

fn mean(g: &[f64], set: &[usize]) -> f64 {
    set.iter().map(|&i| g[i]).sum::<f64>() / set.len() as f64
}

/// Both sides of the identity expressing `avg_{L_1} g - avg_L g` through
/// pairwise block differences, block sums and tail averages.
/// `L` is the union of the parts, which must cover `0..g.len()` disjointly.
pub fn averaging_identity(blocks: &[Vec<usize>], tails: &[Vec<usize>], g: &[f64]) -> Result<(f64, f64)> {
    if blocks.is_empty() {
        return Err(HarnessError::NotAPartition("no blocks".into()));
    }
    let mut seen = vec![false; g.len()];
    for part in blocks.iter().chain(tails) {
        if part.is_empty() {
            return Err(HarnessError::NotAPartition("empty part".into()));
        }
        for &i in part {
            if i >= g.len() || std::mem::replace(&mut seen[i], true) {
                return Err(HarnessError::NotAPartition(format!("element {i} is missing from g or repeated")));
            }
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(HarnessError::NotAPartition("parts do not cover every element".into()));
    }
    let total = g.len() as f64;
    let l = blocks.len() as f64;
    let first = mean(g, &blocks[0]);
    let lhs = first - g.iter().sum::<f64>() / total;
    let mut rhs = 0.0;
    for (i, b) in blocks.iter().enumerate() {
        let share = b.len() as f64 / total;
        let avg = mean(g, b);
        if i > 0 {
            rhs += 0.5 * (1.0 / l + share) * (first - avg);
        }
        rhs += 0.5 * (1.0 / l - share) * (first + avg);
    }
    for t in tails {
        rhs -= t.len() as f64 / total * mean(g, t);
    }
    Ok((lhs, rhs))
}

/// `|LHS - RHS|` of [`averaging_identity`].
pub fn averaging_decomposition(blocks: &[Vec<usize>], tails: &[Vec<usize>], g: &[f64]) -> Result<f64> {
    let (lhs, rhs) = averaging_identity(blocks, tails, g)?;
    Ok((lhs - rhs).abs())
}

impl Partition {
    /// The identity on this partition, with `g` given on the whole graph.
    pub fn averaging_residual(&self, g: &[f64]) -> Result<f64> {
        let local = |set: &[usize]| -> Vec<usize> {
            set.iter().map(|v| self.ball.binary_search(v).expect("part lies in the ball")).collect()
        };
        let blocks: Vec<Vec<usize>> = (0..self.block_count()).map(|i| local(self.block(i))).collect();
        let tails: Vec<Vec<usize>> = if self.tail.is_empty() { Vec::new() } else { vec![local(&self.tail)] };
        let values: Vec<f64> = self.ball.iter().map(|&v| g[v]).collect();
        averaging_decomposition(&blocks, &tails, &values)
    }
}
