//! Finite weighted graphs, metric balls and exhaustions.
//!
//! Vertices are addressed internally by dense indices `0..n` in canonical
//! (sorted external id) order. External ids are kept only for IO.
//!
//! Balls use the **open** convention `B(x, r) = { y : d(x, y) < r }`, so
//! `B(x, 0)` is empty and `B(x, 1) = {x}`. Many graph libraries use closed
//! balls; every radius in this crate is an open-ball radius.

mod families;
mod io;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

pub use families::{generate, path_exhaustion, sg_exhaustion, Family, FamilyGraph, DEFAULT_VERTEX_BUDGET};
pub use io::{GraphDocument, BoundaryEntry, EdgeEntry};

/// Dense vertex index into a [`WeightedGraph`].
pub type Vertex = usize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph is disconnected ({components} components)")]
    DisconnectedGraph { components: usize },
    #[error("edge ({u}, {v}) has nonpositive or non-finite conductance {c}")]
    NonpositiveConductance { u: u64, v: u64, c: f64 },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: u64, v: u64 },
    #[error("self-loop at vertex {0}")]
    SelfLoop(u64),
    #[error("unknown vertex {0}")]
    UnknownVertex(u64),
    #[error("graph has no vertices")]
    Empty,
    #[error("requested graph needs {needed} vertices, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: usize },
    #[error("bad radius sequence: {0}")]
    BadRadiusSequence(String),
    #[error("induced subgraph on ball of radius {radius} is disconnected")]
    DisconnectedBall { radius: usize },
    #[error("graph document: {0}")]
    Format(String),
}

/// Finite connected undirected graph with positive edge conductances.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    ids: Vec<u64>,
    edges: Vec<(Vertex, Vertex, f64)>,
    adjacency: Vec<Vec<(Vertex, f64)>>,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// Builds a graph from `(u, v, conductance)` triples over external ids.
    ///
    /// The vertex set is the set of ids mentioned by the edges.
    pub fn from_edges(edges: &[(u64, u64, f64)]) -> Result<Self, GraphError> {
        let ids: BTreeSet<u64> = edges.iter().flat_map(|&(u, v, _)| [u, v]).collect();
        Self::from_parts(ids.into_iter().collect(), edges)
    }

    /// Builds a graph from an explicit vertex list (which may add isolated
    /// vertices, rejected unless the graph is a single vertex) and edges.
    pub fn from_parts(vertices: Vec<u64>, edges: &[(u64, u64, f64)]) -> Result<Self, GraphError> {
        let mut ids = vertices;
        ids.sort_unstable();
        ids.dedup();
        if ids.is_empty() {
            return Err(GraphError::Empty);
        }
        let index: BTreeMap<u64, Vertex> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut seen = BTreeSet::new();
        let mut internal = Vec::with_capacity(edges.len());
        for &(u, v, c) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(GraphError::NonpositiveConductance { u, v, c });
            }
            let iu = *index.get(&u).ok_or(GraphError::UnknownVertex(u))?;
            let iv = *index.get(&v).ok_or(GraphError::UnknownVertex(v))?;
            let key = (iu.min(iv), iu.max(iv));
            if !seen.insert(key) {
                return Err(GraphError::DuplicateEdge { u, v });
            }
            internal.push((key.0, key.1, c));
        }
        internal.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let g = Self::assemble(ids, internal);
        let components = g.component_count();
        if components != 1 {
            return Err(GraphError::DisconnectedGraph { components });
        }
        Ok(g)
    }

    /// Builds a graph over dense indices `0..n`; ids equal indices.
    pub fn from_indexed(n: usize, edges: &[(Vertex, Vertex, f64)]) -> Result<Self, GraphError> {
        let e: Vec<(u64, u64, f64)> = edges.iter().map(|&(u, v, c)| (u as u64, v as u64, c)).collect();
        Self::from_parts((0..n as u64).collect(), &e)
    }

    fn assemble(ids: Vec<u64>, edges: Vec<(Vertex, Vertex, f64)>) -> Self {
        let n = ids.len();
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v, c) in &edges {
            adjacency[u].push((v, c));
            adjacency[v].push((u, c));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(w, _)| w);
        }
        let weights = adjacency.iter().map(|l| l.iter().map(|&(_, c)| c).sum()).collect();
        Self { ids, edges, adjacency, weights }
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v, c)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(Vertex, Vertex, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, x: Vertex) -> &[(Vertex, f64)] {
        &self.adjacency[x]
    }

    /// Conductance of the edge `xy`, zero when absent.
    pub fn conductance(&self, x: Vertex, y: Vertex) -> f64 {
        self.adjacency[x]
            .binary_search_by_key(&y, |&(w, _)| w)
            .map(|i| self.adjacency[x][i].1)
            .unwrap_or(0.0)
    }

    /// Vertex weight `c_x`, the sum of incident conductances.
    pub fn weight(&self, x: Vertex) -> f64 {
        self.weights[x]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self, x: Vertex) -> usize {
        self.adjacency[x].len()
    }

    /// Volume `V(A) = sum of c_x over A`.
    pub fn volume<'a>(&self, set: impl IntoIterator<Item = &'a Vertex>) -> f64 {
        set.into_iter().map(|&x| self.weights[x]).sum()
    }

    pub fn total_volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn id(&self, x: Vertex) -> u64 {
        self.ids[x]
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn index_of(&self, id: u64) -> Result<Vertex, GraphError> {
        self.ids.binary_search(&id).map_err(|_| GraphError::UnknownVertex(id))
    }

    /// Largest discrepancy between stored `c_x` and a fresh recomputation.
    pub fn weight_residual(&self) -> f64 {
        let mut fresh = vec![0.0; self.vertex_count()];
        for &(u, v, c) in &self.edges {
            fresh[u] += c;
            fresh[v] += c;
        }
        fresh
            .iter()
            .zip(&self.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    fn component_count(&self) -> usize {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &(y, _) in &self.adjacency[x] {
                    if !seen[y] {
                        seen[y] = true;
                        stack.push(y);
                    }
                }
            }
        }
        count
    }

    /// Breadth-first graph distances from `x`.
    pub fn distances_from(&self, x: Vertex) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count()];
        dist[x] = 0;
        let mut queue = VecDeque::from([x]);
        while let Some(u) = queue.pop_front() {
            for &(w, _) in &self.adjacency[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn eccentricity(&self, x: Vertex) -> usize {
        self.distances_from(x).into_iter().max().unwrap_or(0)
    }

    /// Open ball `{ y : d(x, y) < r }`, sorted.
    pub fn ball(&self, x: Vertex, r: usize) -> Result<Vec<Vertex>, GraphError> {
        if x >= self.vertex_count() {
            return Err(GraphError::UnknownVertex(x as u64));
        }
        if r == 0 {
            return Ok(Vec::new());
        }
        Ok(self
            .distances_from(x)
            .into_iter()
            .enumerate()
            .filter(|&(_, d)| d < r)
            .map(|(y, _)| y)
            .collect())
    }

    /// Vertices of the ball in breadth-first order (distance, then index).
    pub fn ball_bfs_order(&self, x: Vertex, r: usize) -> Vec<Vertex> {
        let dist = self.distances_from(x);
        let mut members: Vec<Vertex> = (0..self.vertex_count()).filter(|&y| dist[y] < r).collect();
        members.sort_by_key(|&y| (dist[y], y));
        members
    }

    /// Induced subgraph on `set` with inherited conductances. Returns the
    /// subgraph and the map from subgraph index to parent index.
    pub fn induced(&self, set: &[Vertex]) -> Result<(WeightedGraph, Vec<Vertex>), GraphError> {
        let mut members: Vec<Vertex> = set.to_vec();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut local = vec![usize::MAX; self.vertex_count()];
        for (i, &x) in members.iter().enumerate() {
            local[x] = i;
        }
        let edges: Vec<(Vertex, Vertex, f64)> = self
            .edges
            .iter()
            .filter(|&&(u, v, _)| local[u] != usize::MAX && local[v] != usize::MAX)
            .map(|&(u, v, c)| (local[u], local[v], c))
            .collect();
        let ids = members.iter().map(|&x| self.ids[x]).collect();
        let sub = Self::assemble(ids, edges);
        let components = sub.component_count();
        if components != 1 {
            return Err(GraphError::DisconnectedGraph { components });
        }
        Ok((sub, members))
    }

    /// Connected components of the subgraph induced on `set`, each sorted,
    /// ordered by their smallest member.
    pub fn components_within(&self, set: &[Vertex]) -> Vec<Vec<Vertex>> {
        let inside: BTreeSet<Vertex> = set.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &s in &inside {
            if !seen.insert(s) {
                continue;
            }
            let mut comp = vec![s];
            let mut stack = vec![s];
            while let Some(x) = stack.pop() {
                for &(y, _) in &self.adjacency[x] {
                    if inside.contains(&y) && seen.insert(y) {
                        comp.push(y);
                        stack.push(y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// True iff the graph has no cycles (it is connected by construction).
    pub fn is_tree(&self) -> bool {
        self.edge_count() + 1 == self.vertex_count()
    }
}

/// One level of an exhaustion: the induced graph on `B(o, r)`.
#[derive(Debug, Clone)]
pub struct ExhaustionLevel {
    pub radius: usize,
    pub graph: WeightedGraph,
    /// Subgraph index -> mother-graph index.
    pub to_mother: Vec<Vertex>,
    /// Position of the origin inside `graph`.
    pub origin: Vertex,
}

/// Nested balls `B(o, r_N)` of a mother graph.
///
/// Level `N` uses `radii[N]`; the first radius is always 1, so level 0 is the
/// single vertex `{o}`.
#[derive(Debug, Clone)]
pub struct GraphExhaustion {
    pub mother: WeightedGraph,
    pub origin: Vertex,
    pub radii: Vec<usize>,
    pub levels: Vec<ExhaustionLevel>,
    /// Optional `(V_N, T_N)` table, one entry per level.
    pub scales: Option<Vec<(f64, f64)>>,
}

impl GraphExhaustion {
    pub fn new(g: &WeightedGraph, origin: Vertex, radii: &[usize]) -> Result<Self, GraphError> {
        if origin >= g.vertex_count() {
            return Err(GraphError::UnknownVertex(origin as u64));
        }
        match radii.first() {
            Some(1) => {}
            Some(r) => return Err(GraphError::BadRadiusSequence(format!("first radius is {r}, must be 1"))),
            None => return Err(GraphError::BadRadiusSequence("no radii".into())),
        }
        if let Some(w) = radii.windows(2).find(|w| w[0] >= w[1]) {
            return Err(GraphError::BadRadiusSequence(format!("{} is not below {}", w[0], w[1])));
        }
        let dist = g.distances_from(origin);
        let mut levels = Vec::with_capacity(radii.len());
        for &r in radii {
            let members: Vec<Vertex> = (0..g.vertex_count()).filter(|&y| dist[y] < r).collect();
            let (graph, to_mother) = g.induced(&members).map_err(|e| match e {
                GraphError::DisconnectedGraph { .. } => GraphError::DisconnectedBall { radius: r },
                other => other,
            })?;
            let origin_local = to_mother.binary_search(&origin).expect("origin lies in every ball");
            levels.push(ExhaustionLevel { radius: r, graph, to_mother, origin: origin_local });
        }
        Ok(Self { mother: g.clone(), origin, radii: radii.to_vec(), levels, scales: None })
    }

    /// Attaches an explicit scale table; both sequences must be strictly increasing and positive.
    pub fn with_scales(mut self, scales: Vec<(f64, f64)>) -> Result<Self, GraphError> {
        if scales.len() != self.levels.len() {
            return Err(GraphError::BadRadiusSequence("scale table length mismatch".into()));
        }
        let ok = scales.iter().all(|&(v, t)| v > 0.0 && t > 0.0)
            && scales.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
        if !ok {
            return Err(GraphError::BadRadiusSequence("scales must be positive and strictly increasing".into()));
        }
        self.scales = Some(scales);
        Ok(self)
    }

    /// Level index used for the `r_{eps N}` scale: `floor(eps * N)` clamped to at least 1
    /// (and to the last available level).
    pub fn eps_index(&self, eps: f64, level: usize) -> usize {
        eps_index(eps, level).min(self.radii.len() - 1)
    }
}

/// `floor(eps * N)` clamped to `>= 1`.
pub fn eps_index(eps: f64, level: usize) -> usize {
    ((eps * level as f64 + 1e-12).floor() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> WeightedGraph {
        let e: Vec<_> = (0..n).map(|i| (i, i + 1, 1.0)).collect();
        WeightedGraph::from_indexed(n + 1, &e).unwrap()
    }

    #[test]
    fn single_edge() {
        let g = WeightedGraph::from_edges(&[(0, 1, 1.0)]).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.weight(0), 1.0);
        assert_eq!(g.weight(1), 1.0);
    }

    #[test]
    fn weights_sum_incident_conductances() {
        let g = WeightedGraph::from_edges(&[(0, 1, 2.0), (1, 2, 3.0)]).unwrap();
        assert_eq!(g.weight(1), 5.0);
        assert_eq!(g.total_volume(), 2.0 * 5.0);
        assert_eq!(g.weight_residual(), 0.0);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            WeightedGraph::from_edges(&[(0, 1, 1.0), (2, 3, 1.0)]),
            Err(GraphError::DisconnectedGraph { components: 2 })
        );
        assert!(matches!(
            WeightedGraph::from_edges(&[(0, 1, 0.0)]),
            Err(GraphError::NonpositiveConductance { .. })
        ));
        assert!(matches!(
            WeightedGraph::from_edges(&[(0, 1, 1.0), (1, 0, 2.0)]),
            Err(GraphError::DuplicateEdge { .. })
        ));
        assert_eq!(WeightedGraph::from_edges(&[(3, 3, 1.0)]), Err(GraphError::SelfLoop(3)));
    }

    #[test]
    fn ids_are_canonicalized() {
        let g = WeightedGraph::from_edges(&[(30, 10, 1.0), (10, 20, 2.0)]).unwrap();
        assert_eq!(g.ids(), &[10, 20, 30]);
        assert_eq!(g.index_of(20).unwrap(), 1);
        assert_eq!(g.conductance(0, 1), 2.0);
        assert_eq!(g.conductance(0, 2), 1.0);
        assert_eq!(g.conductance(1, 2), 0.0);
    }

    #[test]
    fn open_balls() {
        let g = path(3);
        assert_eq!(g.ball(0, 2).unwrap(), vec![0, 1]);
        assert_eq!(g.ball(2, 1).unwrap(), vec![2]);
        assert!(g.ball(2, 0).unwrap().is_empty());
        assert_eq!(g.ball(0, 100).unwrap().len(), 4);
        assert_eq!(g.ball(9, 1), Err(GraphError::UnknownVertex(9)));
    }

    #[test]
    fn exhaustion_of_path() {
        let g = path(7);
        let ex = GraphExhaustion::new(&g, 0, &[1, 2, 4]).unwrap();
        let sets: Vec<Vec<Vertex>> = ex.levels.iter().map(|l| l.to_mother.clone()).collect();
        assert_eq!(sets, vec![vec![0], vec![0, 1], vec![0, 1, 2, 3]]);
        assert!(matches!(GraphExhaustion::new(&g, 0, &[2, 1]), Err(GraphError::BadRadiusSequence(_))));
        assert!(matches!(GraphExhaustion::new(&g, 0, &[1, 3, 3]), Err(GraphError::BadRadiusSequence(_))));
    }

    #[test]
    fn eps_index_floors_and_clamps() {
        assert_eq!(eps_index(0.5, 2), 1);
        assert_eq!(eps_index(0.5, 3), 1);
        assert_eq!(eps_index(0.5, 4), 2);
        assert_eq!(eps_index(0.1, 3), 1);
        assert_eq!(eps_index(1.0, 5), 5);
    }

    #[test]
    fn components_within_set() {
        let g = path(5);
        assert_eq!(g.components_within(&[0, 1, 3, 5, 4]), vec![vec![0, 1], vec![3, 4, 5]]);
    }
}
