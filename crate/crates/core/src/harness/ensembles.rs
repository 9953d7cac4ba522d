//! Canonical measures, equivalence of ensembles, and the two-block estimates.

use rayon::prelude::*;
use serde::Serialize;

use super::bundle::binomial;
use super::forms::{check_sites, min_eigenvalue_by_count, swap_form};
use super::{Anchor, Bundle, GlobalAverage, HarnessError, Result};
use crate::exclusion::{Configuration, MeasureSpec};
use crate::graph::{Vertex, WeightedGraph};
use crate::potential::effective_resistance_pair;

/// Largest set enumerated by [`canonical_expectation`].
pub const ENUMERATION_LIMIT: usize = 22;

/// Largest block size in the exhaustive two-block check.
pub const TWO_BLOCK_LIMIT: usize = 14;

/// Sets up to this size get an enumeration cross-check in the ensemble table.
const TABLE_ENUMERATION: usize = 16;

/// Uniform expectation of `observable` over configurations of `n` sites with
/// exactly `k` particles.
pub fn canonical_expectation(n: usize, k: usize, observable: impl Fn(&Configuration) -> f64) -> Result<f64> {
    if k > n {
        return Err(HarnessError::KOutOfRange { k, n });
    }
    if n > ENUMERATION_LIMIT {
        return Err(HarnessError::StateSpaceTooLarge { sites: n, cap: ENUMERATION_LIMIT });
    }
    let mut sum = 0.0;
    let mut count = 0u64;
    for_each_subset(n, k, |mask| {
        sum += observable(&Configuration::from_index(n, mask));
        count += 1;
    });
    Ok(sum / count as f64)
}

/// Visits every `n`-bit mask with `k` ones in increasing order.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(usize)) {
    if k == 0 {
        visit(0);
        return;
    }
    let mut mask = (1usize << k) - 1;
    while mask < 1 << n {
        visit(mask);
        let low = mask & mask.wrapping_neg();
        let ripple = mask + low;
        mask = (((ripple ^ mask) >> 2) / low) | ripple;
    }
}

/// `P(Y = j)` for `Y` hypergeometric: `draws` from `population` items of which
/// `successes` are marked.
pub fn hypergeometric_pmf(population: usize, successes: usize, draws: usize, j: usize) -> f64 {
    if j > successes || j > draws || draws - j > population - successes {
        return 0.0;
    }
    binomial(successes, j) * binomial(population - successes, draws - j) / binomial(population, draws)
}

/// `nu_{*,k}[|avg over block 1 - avg over block 2|]` for two blocks of `m` sites.
pub fn block_average_gap(m: usize, k: usize) -> f64 {
    (0..=k.min(m))
        .map(|j| (2.0 * j as f64 - k as f64).abs() / m as f64 * hypergeometric_pmf(2 * m, m, k, j))
        .sum()
}

/// Exact per-`k` moments of `Y = #particles in block 1` from all `2^{2m}` configurations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Moments {
    count: u64,
    abs_gap: u64,
    sum: u64,
    sum_sq: u64,
}

fn enumerate_two_blocks(m: usize) -> Vec<Moments> {
    let bits = 2 * m;
    let total = 1u64 << bits;
    let low_mask = (1u64 << m) - 1;
    let chunk = (total / 256).max(1);
    (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Moments::default(); bits + 1];
            for mask in c * chunk..((c + 1) * chunk).min(total) {
                let k = mask.count_ones() as u64;
                let j = (mask & low_mask).count_ones() as u64;
                let e = &mut acc[k as usize];
                e.count += 1;
                e.abs_gap += (2 * j).abs_diff(k);
                e.sum += j;
                e.sum_sq += j * j;
            }
            acc
        })
        .reduce(
            || vec![Moments::default(); bits + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.count += y.count;
                    x.abs_gap += y.abs_gap;
                    x.sum += y.sum;
                    x.sum_sq += y.sum_sq;
                }
                a
            },
        )
}

/// `sup_k nu_{*,k}[|gap|]` from exhaustive enumeration, with the maximizing `k`.
pub fn two_block_sup_by_enumeration(m: usize) -> Result<(f64, usize)> {
    if m == 0 || m > TWO_BLOCK_LIMIT {
        return Err(HarnessError::StateSpaceTooLarge { sites: 2 * m, cap: 2 * TWO_BLOCK_LIMIT });
    }
    let moments = enumerate_two_blocks(m);
    Ok(moments
        .iter()
        .enumerate()
        .map(|(k, e)| (e.abs_gap as f64 / (m as f64 * e.count as f64), k))
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a }))
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoBlockRow {
    pub m: usize,
    /// Closed-form `sup_k nu_{*,k}[|gap|]`.
    pub sup_gap: f64,
    pub argmax_k: usize,
    pub enumerated_sup: f64,
    /// `max_k |closed form - enumeration|`.
    pub enumeration_error: f64,
    /// `m^{-1/2} (m / (2m - 1))^{1/2}`.
    pub bound: f64,
    pub within_bound: bool,
    /// `max_k |E[Y] - k/2|`.
    pub mean_error: f64,
    /// `max_k |Var(Y) - (k/2)(1 - k/(2m))(m/(2m-1))|`.
    pub variance_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoBlockTable {
    pub rows: Vec<TwoBlockRow>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Exhaustive check of the two-block gap bound and the variance formula.
pub fn verify_two_block_bound(sizes: &[usize]) -> Result<TwoBlockTable> {
    let tolerance = 1e-12;
    let rows = sizes
        .iter()
        .map(|&m| {
            if m == 0 || m > TWO_BLOCK_LIMIT {
                return Err(HarnessError::StateSpaceTooLarge { sites: 2 * m, cap: 2 * TWO_BLOCK_LIMIT });
            }
            let moments = enumerate_two_blocks(m);
            let mf = m as f64;
            let mut row = TwoBlockRow {
                m,
                sup_gap: f64::NEG_INFINITY,
                argmax_k: 0,
                enumerated_sup: f64::NEG_INFINITY,
                enumeration_error: 0.0,
                bound: (1.0 / mf).sqrt() * (mf / (2.0 * mf - 1.0)).sqrt(),
                within_bound: false,
                mean_error: 0.0,
                variance_error: 0.0,
            };
            for (k, e) in moments.iter().enumerate() {
                let closed = block_average_gap(m, k);
                let enumerated = e.abs_gap as f64 / (mf * e.count as f64);
                if closed > row.sup_gap {
                    row.sup_gap = closed;
                    row.argmax_k = k;
                }
                row.enumerated_sup = row.enumerated_sup.max(enumerated);
                row.enumeration_error = row.enumeration_error.max((closed - enumerated).abs());
                let mean = e.sum as f64 / e.count as f64;
                row.mean_error = row.mean_error.max((mean - k as f64 / 2.0).abs());
                let (n, s, q) = (e.count as u128, e.sum as u128, e.sum_sq as u128);
                let variance = (n * q - s * s) as f64 / (n * n) as f64;
                let kf = k as f64;
                let formula = kf / 2.0 * (1.0 - kf / (2.0 * mf)) * (mf / (2.0 * mf - 1.0));
                row.variance_error = row.variance_error.max((variance - formula).abs());
            }
            row.within_bound = row.sup_gap <= row.bound && row.enumerated_sup <= row.bound;
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = rows.iter().all(|r| {
        r.within_bound && r.enumeration_error <= tolerance && r.mean_error <= tolerance && r.variance_error <= tolerance
    });
    Ok(TwoBlockTable { rows, tolerance, passed })
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleRow {
    pub size: usize,
    /// `sup_k |nu_{*,k}[phi] - Phi(k / |Lambda|)|`.
    pub sup_gap: f64,
    pub argmax_k: usize,
    /// `max_k |closed form - enumeration|`, for small sets.
    pub enumeration_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleTable {
    pub bundle: Bundle,
    pub anchor: Anchor,
    pub rows: Vec<EnsembleRow>,
    pub threshold: f64,
    /// The second half of the table decreases strictly.
    pub eventually_decreasing: bool,
    pub final_below_threshold: bool,
    pub passed: bool,
}

/// The first `size` vertices of a breadth-first search from `p`, for each size.
pub fn bfs_prefixes(g: &WeightedGraph, p: Vertex, sizes: &[usize]) -> Result<Vec<Vec<Vertex>>> {
    let order = g.ball_bfs_order(p, g.vertex_count() + 1);
    sizes
        .iter()
        .map(|&s| {
            if s > order.len() {
                return Err(HarnessError::InvalidConfig(format!("set size {s} exceeds the graph")));
            }
            let mut set = order[..s].to_vec();
            set.sort_unstable();
            Ok(set)
        })
        .collect()
}

/// Equivalence-of-ensembles table over an increasing sequence of sets.
pub fn verify_equivalence_of_ensembles(
    g: &WeightedGraph,
    bundle: Bundle,
    anchor: Anchor,
    sets: &[Vec<Vertex>],
    threshold: f64,
) -> Result<EnsembleTable> {
    let average = GlobalAverage::new(g, bundle, anchor)?;
    let rows = sets
        .par_iter()
        .map(|set| {
            let mut set = set.clone();
            set.sort_unstable();
            set.dedup();
            if average.support.iter().any(|v| set.binary_search(v).is_err()) {
                return Err(HarnessError::InconsistentPartition("set misses part of the bundle support".into()));
            }
            let n = set.len();
            let mut row = EnsembleRow { size: n, sup_gap: f64::NEG_INFINITY, argmax_k: 0, enumeration_error: None };
            for k in 0..=n {
                let closed = average.canonical(n, k)?;
                let gap = (closed - average.eval(k as f64 / n as f64)).abs();
                if gap > row.sup_gap {
                    row.sup_gap = gap;
                    row.argmax_k = k;
                }
                if n <= TABLE_ENUMERATION {
                    let enumerated = canonical_expectation(n, k, |local| {
                        bundle.evaluate_with(g, anchor, |v| set.binary_search(&v).is_ok_and(|i| local.get(i)))
                    })?;
                    let err = (closed - enumerated).abs();
                    row.enumeration_error = Some(row.enumeration_error.map_or(err, |e: f64| e.max(err)));
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let half = rows.len() / 2;
    let eventually_decreasing = rows.len() >= 2 && rows[half.min(rows.len() - 2)..].windows(2).all(|w| w[1].sup_gap < w[0].sup_gap);
    let final_below_threshold = rows.last().is_some_and(|r| r.sup_gap < threshold);
    Ok(EnsembleTable {
        bundle,
        anchor,
        passed: eventually_decreasing && final_below_threshold,
        rows,
        threshold,
        eventually_decreasing,
        final_below_threshold,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TwoBlockComparison {
    /// `z_0, z_1, ..., z_B`.
    pub bridges: Vec<Vertex>,
    /// `1 + sum_i R_eff(z_i, z_{i+1})`.
    pub factor: f64,
    /// `lambda_min(factor A_G - A_2)`.
    pub min_eigenvalue: f64,
}

/// Compares the two-block generator (exclusion inside each block plus unit
/// swaps along the bridge chain) with the exclusion form of the whole graph.
pub fn two_block_comparison(g: &WeightedGraph, lx: &[Vertex], ly: &[Vertex], alpha: f64) -> Result<TwoBlockComparison> {
    if lx.len() != ly.len() {
        return Err(HarnessError::UnequalSizes(lx.len(), ly.len()));
    }
    let n = g.vertex_count();
    check_sites(n)?;
    let mut owner = vec![0u8; n];
    for (tag, set) in [(1u8, lx), (2u8, ly)] {
        for &v in set {
            if v >= n || owner[v] != 0 {
                return Err(HarnessError::InconsistentPartition(format!("vertex {v} is repeated or unknown")));
            }
            owner[v] = tag;
        }
    }
    let mut bridges = vec![*lx.iter().min().ok_or(HarnessError::InvalidConfig("empty block".into()))?];
    let mut comps = g.components_within(ly);
    comps.sort_by_key(|c| *c.iter().min().expect("nonempty component"));
    bridges.extend(comps.iter().map(|c| *c.iter().min().expect("nonempty component")));
    let mut swaps: Vec<(Vertex, Vertex, f64)> =
        g.edges().iter().copied().filter(|&(u, v, _)| owner[u] != 0 && owner[u] == owner[v]).collect();
    let mut factor = 1.0;
    for w in bridges.windows(2) {
        factor += effective_resistance_pair(g, w[0], w[1])?;
        swaps.push((w[0], w[1], 1.0));
    }
    let min_eigenvalue = min_eigenvalue_by_count(n, &MeasureSpec::Bernoulli(alpha), |states, weights| {
        swap_form(states, weights, g.edges()) * factor - swap_form(states, weights, &swaps)
    });
    Ok(TwoBlockComparison { bridges, factor, min_eigenvalue })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, DEFAULT_VERTEX_BUDGET};
    use approx::assert_relative_eq;

    #[test]
    fn canonical_examples() {
        for n in 1..8 {
            for k in 0..=n {
                let e = canonical_expectation(n, k, |c| c.occupancy(n - 1)).unwrap();
                assert_relative_eq!(e, k as f64 / n as f64, epsilon = 1e-14);
            }
        }
        assert_eq!(canonical_expectation(2, 1, |c| c.occupancy(0) * c.occupancy(1)).unwrap(), 0.0);
        assert!(matches!(canonical_expectation(3, 4, |_| 0.0), Err(HarnessError::KOutOfRange { k: 4, n: 3 })));
    }

    #[test]
    fn gap_closed_form_matches_enumeration() {
        for m in 1..=6 {
            for k in 0..=2 * m {
                let enumerated = canonical_expectation(2 * m, k, |c| {
                    let a: f64 = (0..m).map(|i| c.occupancy(i)).sum();
                    let b: f64 = (m..2 * m).map(|i| c.occupancy(i)).sum();
                    ((a - b) / m as f64).abs()
                })
                .unwrap();
                assert!((block_average_gap(m, k) - enumerated).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_block_examples() {
        let table = verify_two_block_bound(&[1, 2, 3, 8]).unwrap();
        assert!(table.passed);
        let one = &table.rows[0];
        assert_eq!((one.sup_gap, one.bound, one.argmax_k), (1.0, 1.0, 1));
        // m = 2, k = 2: Var(Y) = 1 * (1/2) * (2/3) = 1/3.
        let moments = enumerate_two_blocks(2);
        let e = moments[2];
        let var = (e.count * e.sum_sq - e.sum * e.sum) as f64 / (e.count * e.count) as f64;
        assert_relative_eq!(var, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(e.sum as f64 / e.count as f64, 1.0);
        assert!(verify_two_block_bound(&[15]).is_err());
    }

    #[test]
    fn hypergeometric_sums_to_one() {
        let total: f64 = (0..=5).map(|j| hypergeometric_pmf(12, 6, 5, j)).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn pair_bundle_decay() {
        let g = generate(Family::Path(20), DEFAULT_VERTEX_BUDGET).unwrap().graph;
        let sets = bfs_prefixes(&g, 1, &[4, 6, 8, 10, 12]).unwrap();
        let table = verify_equivalence_of_ensembles(&g, Bundle::NeighbourPairs { conductance: false }, Anchor::Vertex(1), &sets, 0.1).unwrap();
        assert!(table.passed, "{table:?}");
        for row in &table.rows {
            let n = row.size as f64;
            let expect = (0..=row.size)
                .map(|k| {
                    let k = k as f64;
                    2.0 * (k * (k - 1.0) / (n * (n - 1.0)) - k * k / (n * n)).abs()
                })
                .fold(0.0, f64::max);
            assert_relative_eq!(row.sup_gap, expect, epsilon = 1e-14);
            assert!(row.enumeration_error.unwrap() <= 1e-12);
        }
        assert!(table.rows[4].sup_gap < table.rows[0].sup_gap);
    }

    #[test]
    fn occupation_gap_vanishes() {
        let g = generate(Family::Sg(2), DEFAULT_VERTEX_BUDGET).unwrap().graph;
        let sets = bfs_prefixes(&g, 0, &[1, 3, 6, 9]).unwrap();
        let table = verify_equivalence_of_ensembles(&g, Bundle::Occupation, Anchor::Vertex(0), &sets, 1e-12).unwrap();
        assert!(table.rows.iter().all(|r| r.sup_gap < 1e-15));
    }

    #[test]
    fn two_block_generator_comparison() {
        let g = generate(Family::Sg(1), DEFAULT_VERTEX_BUDGET).unwrap().graph;
        let cmp = two_block_comparison(&g, &[0, 1, 2], &[3, 4, 5], 0.5).unwrap();
        assert!(cmp.min_eigenvalue >= -1e-10, "{cmp:?}");
        assert!(cmp.factor > 1.0);
        assert_eq!(two_block_comparison(&g, &[0, 1], &[3], 0.5).unwrap_err(), HarnessError::UnequalSizes(2, 1));
        // A disconnected second block needs one bridge per component.
        let path = generate(Family::Path(5), DEFAULT_VERTEX_BUDGET).unwrap().graph;
        let cmp = two_block_comparison(&path, &[0, 1], &[3, 5], 0.3).unwrap();
        assert_eq!(cmp.bridges, vec![0, 3, 5]);
        assert_relative_eq!(cmp.factor, 1.0 + 3.0 + 2.0, epsilon = 1e-12);
        assert!(cmp.min_eigenvalue >= -1e-10);
    }
}
