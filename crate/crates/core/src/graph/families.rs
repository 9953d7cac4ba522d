//! Example graph families with unit conductances.

use std::collections::{BTreeMap, BTreeSet};

use super::{GraphError, GraphExhaustion, Vertex, WeightedGraph};

/// Default cap on generated vertex counts.
pub const DEFAULT_VERTEX_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `n + 1` vertices in a line.
    Path(usize),
    /// The box `{0, ..., side}^d` with nearest-neighbour edges.
    LatticeBox { dim: usize, side: usize },
    /// Level-`N` Sierpinski gasket graph.
    Sg(usize),
    /// Level-`N` Vicsek tree (cross-shaped cells).
    Vicsek(usize),
    /// Level-`N` Sierpinski carpet graph on the `3^N x 3^N` grid.
    Carpet(usize),
}

impl Family {
    /// Vertex count, computed without building the graph.
    pub fn vertex_count(&self) -> u128 {
        match *self {
            Family::Path(n) => n as u128 + 1,
            Family::LatticeBox { dim, side } => (side as u128 + 1).saturating_pow(dim as u32),
            Family::Sg(n) => 3 * (3u128.saturating_pow(n as u32) + 1) / 2,
            Family::Vicsek(n) => 4 * 5u128.saturating_pow(n as u32) + 1,
            // Upper bound: corners of the full grid.
            Family::Carpet(n) => (3u128.saturating_pow(n as u32) + 1).saturating_pow(2),
        }
    }

    /// Parses `path:5`, `box:2:4`, `sg:3`, `vicsek:2`, `carpet:2`.
    pub fn parse(text: &str) -> Option<Family> {
        let parts: Vec<&str> = text.trim().split(':').collect();
        let num = |i: usize| parts.get(i).and_then(|s| s.parse::<usize>().ok());
        match (parts.first().copied(), parts.len()) {
            (Some("path"), 2) => num(1).map(Family::Path),
            (Some("sg"), 2) => num(1).map(Family::Sg),
            (Some("vicsek"), 2) => num(1).map(Family::Vicsek),
            (Some("carpet"), 2) => num(1).map(Family::Carpet),
            (Some("box") | Some("lattice_box"), 3) => Some(Family::LatticeBox { dim: num(1)?, side: num(2)? }),
            _ => None,
        }
    }
}

/// A generated graph with its distinguished vertices.
#[derive(Debug, Clone)]
pub struct FamilyGraph {
    pub graph: WeightedGraph,
    /// Outer corners (`V_0` for the gasket); empty for families without one.
    pub corners: Vec<Vertex>,
    /// Default origin: the lower-left corner, which is always index 0.
    pub origin: Vertex,
}

pub fn generate(family: Family, budget: usize) -> Result<FamilyGraph, GraphError> {
    let needed = family.vertex_count();
    if needed > budget as u128 {
        return Err(GraphError::BudgetExceeded { needed, budget });
    }
    match family {
        Family::Path(n) => {
            let edges: Vec<(Vertex, Vertex, f64)> = (0..n).map(|i| (i, i + 1, 1.0)).collect();
            let graph = WeightedGraph::from_indexed(n + 1, &edges)?;
            let corners = if n == 0 { vec![0] } else { vec![0, n] };
            Ok(FamilyGraph { graph, corners, origin: 0 })
        }
        Family::LatticeBox { dim, side } => lattice_box(dim, side),
        Family::Sg(n) => sierpinski_gasket(n),
        Family::Vicsek(n) => vicsek(n),
        Family::Carpet(n) => carpet(n),
    }
}

fn lattice_box(dim: usize, side: usize) -> Result<FamilyGraph, GraphError> {
    if dim == 0 {
        return Err(GraphError::Empty);
    }
    let width = side + 1;
    let count = width.pow(dim as u32);
    let mut edges = Vec::new();
    for v in 0..count {
        let mut stride = 1;
        for _ in 0..dim {
            if (v / stride) % width + 1 < width {
                edges.push((v, v + stride, 1.0));
            }
            stride *= width;
        }
    }
    let graph = WeightedGraph::from_parts((0..count as u64).collect(), &to_ids(&edges))?;
    let corners = (0..1usize << dim)
        .map(|mask| (0..dim).filter(|b| mask >> b & 1 == 1).map(|b| side * width.pow(b as u32)).sum())
        .collect::<BTreeSet<Vertex>>()
        .into_iter()
        .collect();
    Ok(FamilyGraph { graph, corners, origin: 0 })
}

fn to_ids(edges: &[(Vertex, Vertex, f64)]) -> Vec<(u64, u64, f64)> {
    edges.iter().map(|&(u, v, c)| (u as u64, v as u64, c)).collect()
}

/// Builds a unit-conductance graph from edges between integer points; ids follow
/// lexicographic point order.
fn from_points(edges: &BTreeSet<((i64, i64), (i64, i64))>) -> (WeightedGraph, BTreeMap<(i64, i64), Vertex>) {
    let points: BTreeSet<(i64, i64)> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let index: BTreeMap<(i64, i64), Vertex> = points.into_iter().enumerate().map(|(i, p)| (p, i)).collect();
    let list: Vec<(u64, u64, f64)> =
        edges.iter().map(|(a, b)| (index[a] as u64, index[b] as u64, 1.0)).collect();
    let graph = WeightedGraph::from_edges(&list).expect("generated families are connected");
    (graph, index)
}

fn ordered(a: (i64, i64), b: (i64, i64)) -> ((i64, i64), (i64, i64)) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Points are `x * e1 + y * e2` in a triangular basis, scaled by `2^N` so every
/// vertex has exact integer coordinates and shared cell corners coincide.
fn sierpinski_gasket(level: usize) -> Result<FamilyGraph, GraphError> {
    fn cells(origin: (i64, i64), size: i64, out: &mut BTreeSet<((i64, i64), (i64, i64))>) {
        let (x, y) = origin;
        if size == 1 {
            let (a, b, c) = ((x, y), (x + 1, y), (x, y + 1));
            out.insert(ordered(a, b));
            out.insert(ordered(a, c));
            out.insert(ordered(b, c));
            return;
        }
        let h = size / 2;
        cells((x, y), h, out);
        cells((x + h, y), h, out);
        cells((x, y + h), h, out);
    }
    let side = 1i64 << level;
    let mut edges = BTreeSet::new();
    cells((0, 0), side, &mut edges);
    let (graph, index) = from_points(&edges);
    let corners = vec![index[&(0, 0)], index[&(side, 0)], index[&(0, side)]];
    Ok(FamilyGraph { graph, corners, origin: index[&(0, 0)] })
}

/// Doubled coordinates: the level-0 cell is the cross joining the corners of
/// `[0, 2]^2` to its centre.
fn vicsek(level: usize) -> Result<FamilyGraph, GraphError> {
    fn cell(origin: (i64, i64), level: usize, out: &mut BTreeSet<((i64, i64), (i64, i64))>) {
        let (x, y) = origin;
        if level == 0 {
            let centre = (x + 1, y + 1);
            for corner in [(x, y), (x + 2, y), (x, y + 2), (x + 2, y + 2)] {
                out.insert(ordered(corner, centre));
            }
            return;
        }
        let l = 2 * 3i64.pow(level as u32 - 1);
        for (dx, dy) in [(0, 0), (2 * l, 0), (0, 2 * l), (2 * l, 2 * l), (l, l)] {
            cell((x + dx, y + dy), level - 1, out);
        }
    }
    let mut edges = BTreeSet::new();
    cell((0, 0), level, &mut edges);
    let (graph, index) = from_points(&edges);
    let s = 2 * 3i64.pow(level as u32);
    let corners = vec![index[&(0, 0)], index[&(s, 0)], index[&(0, s)], index[&(s, s)]];
    Ok(FamilyGraph { graph, corners, origin: index[&(0, 0)] })
}

/// Unit squares of the `3^N` grid whose index pair never has a `(1, 1)`
/// ternary digit; edges are the sides of kept squares.
fn carpet(level: usize) -> Result<FamilyGraph, GraphError> {
    let n = 3i64.pow(level as u32);
    let kept = |mut i: i64, mut j: i64| {
        while i > 0 || j > 0 {
            if i % 3 == 1 && j % 3 == 1 {
                return false;
            }
            i /= 3;
            j /= 3;
        }
        true
    };
    let mut edges = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if kept(i, j) {
                let (a, b, c, d) = ((i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1));
                for (p, q) in [(a, b), (a, c), (b, d), (c, d)] {
                    edges.insert(ordered(p, q));
                }
            }
        }
    }
    let (graph, index) = from_points(&edges);
    let corners = vec![index[&(0, 0)], index[&(n, 0)], index[&(0, n)], index[&(n, n)]];
    Ok(FamilyGraph { graph, corners, origin: index[&(0, 0)] })
}

/// Exhaustion of the gasket from corner `a_0` with `r_N = 2^N`, `N = 0..=levels`.
///
/// Built inside `sg(levels + 1)` so every ball is a proper subset of the mother graph.
pub fn sg_exhaustion(levels: usize) -> Result<GraphExhaustion, GraphError> {
    let fg = generate(Family::Sg(levels + 1), DEFAULT_VERTEX_BUDGET)?;
    let radii: Vec<usize> = (0..=levels).map(|n| 1usize << n).collect();
    GraphExhaustion::new(&fg.graph, fg.origin, &radii)
}

/// Exhaustion of a path from its endpoint with `r_N = 2^N`.
pub fn path_exhaustion(levels: usize) -> Result<GraphExhaustion, GraphError> {
    let fg = generate(Family::Path(1 << levels), DEFAULT_VERTEX_BUDGET)?;
    let radii: Vec<usize> = (0..=levels).map(|n| 1usize << n).collect();
    GraphExhaustion::new(&fg.graph, fg.origin, &radii)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gen(f: Family) -> FamilyGraph {
        generate(f, DEFAULT_VERTEX_BUDGET).unwrap()
    }

    #[test]
    fn sg_zero_is_triangle() {
        let g = gen(Family::Sg(0)).graph;
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn sg_one_counts() {
        let g = gen(Family::Sg(1)).graph;
        assert_eq!(g.vertex_count(), 6);
        assert_eq!(g.edge_count(), 9);
    }

    #[test]
    fn sg_vertex_counts_and_weights() {
        for n in 0..=6 {
            let fg = gen(Family::Sg(n));
            assert_eq!(fg.graph.vertex_count() as u128, Family::Sg(n).vertex_count());
            assert_eq!(fg.graph.weight_residual(), 0.0);
            assert_eq!(fg.origin, 0);
            for &c in &fg.corners {
                assert_eq!(fg.graph.degree(c), 2);
            }
            let interior_degrees_are_four =
                (0..fg.graph.vertex_count()).filter(|v| !fg.corners.contains(v)).all(|v| fg.graph.degree(v) == 4);
            assert!(interior_degrees_are_four);
        }
    }

    #[test]
    fn path_three() {
        let g = gen(Family::Path(3)).graph;
        assert_eq!(g.edges().iter().map(|&(u, v, _)| (u, v)).collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn vicsek_is_tree() {
        for n in 0..=4 {
            let fg = gen(Family::Vicsek(n));
            assert!(fg.graph.is_tree());
            assert_eq!(fg.graph.vertex_count() as u128, Family::Vicsek(n).vertex_count());
        }
    }

    #[test]
    fn carpet_level_one() {
        let g = gen(Family::Carpet(1)).graph;
        // Every side of the removed middle square also borders a kept square.
        assert_eq!(g.vertex_count(), 16);
        assert_eq!(g.edge_count(), 24);
        let g2 = gen(Family::Carpet(2)).graph;
        assert!(g2.vertex_count() < 100);
    }

    #[test]
    fn lattice_box_matches_path() {
        let a = gen(Family::LatticeBox { dim: 1, side: 5 }).graph;
        let b = gen(Family::Path(5)).graph;
        assert_eq!(a, b);
        let sq = gen(Family::LatticeBox { dim: 2, side: 2 });
        assert_eq!(sq.graph.vertex_count(), 9);
        assert_eq!(sq.graph.edge_count(), 12);
        assert_eq!(sq.corners, vec![0, 2, 6, 8]);
    }

    #[test]
    fn budget_enforced() {
        assert!(matches!(generate(Family::Sg(20), 1000), Err(GraphError::BudgetExceeded { .. })));
    }

    #[test]
    fn parse_family_specs() {
        assert_eq!(Family::parse("sg:4"), Some(Family::Sg(4)));
        assert_eq!(Family::parse("box:2:3"), Some(Family::LatticeBox { dim: 2, side: 3 }));
        assert_eq!(Family::parse("tree:3"), None);
    }

    #[test]
    fn sg_exhaustion_balls_connected_and_nested() {
        let ex = sg_exhaustion(3).unwrap();
        for w in ex.levels.windows(2) {
            assert!(w[0].to_mother.iter().all(|v| w[1].to_mother.contains(v)));
        }
        // B(o, 2^N) is the level-N cell minus its far side, which has 2^N + 1 vertices.
        for (n, level) in ex.levels.iter().enumerate() {
            assert_eq!(level.graph.vertex_count() as u128, Family::Sg(n).vertex_count() - (1 << n) - 1);
        }
    }
}
