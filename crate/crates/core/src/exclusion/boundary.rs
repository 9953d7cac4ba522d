//! Reservoir specification for the boundary-driven process.

use crate::graph::{BoundaryEntry, Vertex, WeightedGraph};

use super::ExclusionError;

/// Boundary vertices with creation rate `lambda_plus` and annihilation rate
/// `lambda_minus`, sorted by vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySpec {
    vertices: Vec<Vertex>,
    lambda_plus: Vec<f64>,
    lambda_minus: Vec<f64>,
    weights: Vec<f64>,
}

impl BoundarySpec {
    /// `entries` are `(vertex, lambda_plus, lambda_minus)`.
    pub fn new(g: &WeightedGraph, entries: &[(Vertex, f64, f64)]) -> Result<Self, ExclusionError> {
        if entries.is_empty() {
            return Err(ExclusionError::EmptyBoundary);
        }
        let mut sorted = entries.to_vec();
        sorted.sort_by_key(|e| e.0);
        for w in sorted.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(ExclusionError::DuplicateBoundaryVertex(w[0].0));
            }
        }
        for &(a, lp, lm) in &sorted {
            if a >= g.vertex_count() {
                return Err(ExclusionError::UnknownVertex(a));
            }
            if !(lp > 0.0 && lm > 0.0 && lp.is_finite() && lm.is_finite()) {
                return Err(ExclusionError::RateNonpositive { vertex: a });
            }
        }
        let vertices: Vec<Vertex> = sorted.iter().map(|e| e.0).collect();
        for &a in &vertices {
            if let Some(&(b, _)) = g.neighbors(a).iter().find(|(b, _)| vertices.binary_search(b).is_ok()) {
                return Err(ExclusionError::BoundaryEdgePresent(a, b));
            }
        }
        Ok(Self {
            weights: vertices.iter().map(|&a| g.weight(a)).collect(),
            lambda_plus: sorted.iter().map(|e| e.1).collect(),
            lambda_minus: sorted.iter().map(|e| e.2).collect(),
            vertices,
        })
    }

    /// Reads the `boundary` section of a graph document.
    pub fn from_entries(g: &WeightedGraph, entries: &[BoundaryEntry]) -> Result<Self, ExclusionError> {
        let triples = entries
            .iter()
            .map(|e| {
                let v = g.index_of(e.v).map_err(|_| ExclusionError::UnknownVertex(e.v as usize))?;
                Ok((v, e.lambda_plus, e.lambda_minus))
            })
            .collect::<Result<Vec<_>, ExclusionError>>()?;
        Self::new(g, &triples)
    }

    pub fn to_entries(&self, g: &WeightedGraph) -> Vec<BoundaryEntry> {
        self.iter()
            .map(|(a, lp, lm)| BoundaryEntry { lambda_minus: lm, lambda_plus: lp, v: g.id(a) })
            .collect()
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn lambda_plus(&self) -> &[f64] {
        &self.lambda_plus
    }

    pub fn lambda_minus(&self) -> &[f64] {
        &self.lambda_minus
    }

    /// `(vertex, lambda_plus, lambda_minus)` in vertex order.
    pub fn iter(&self) -> impl Iterator<Item = (Vertex, f64, f64)> + '_ {
        (0..self.len()).map(|i| (self.vertices[i], self.lambda_plus[i], self.lambda_minus[i]))
    }

    /// Position of `a` in the boundary list.
    pub fn position(&self, a: Vertex) -> Option<usize> {
        self.vertices.binary_search(&a).ok()
    }

    pub fn contains(&self, a: Vertex) -> bool {
        self.position(a).is_some()
    }

    /// Smallest `gamma >= 1` bounding `lambda_plus / lambda_minus` and its inverse.
    pub fn gamma(&self) -> f64 {
        self.lambda_plus
            .iter()
            .zip(&self.lambda_minus)
            .map(|(p, m)| (p / m).max(m / p))
            .fold(1.0, f64::max)
    }

    /// Smallest `gamma' >= 1` bounding `lambda_plus / c_a` and its inverse.
    pub fn gamma_prime(&self) -> f64 {
        self.lambda_plus
            .iter()
            .zip(&self.weights)
            .map(|(p, c)| (p / c).max(c / p))
            .fold(1.0, f64::max)
    }

    /// `1 / (1 + gamma)`, in `(0, 1/2]`.
    pub fn delta(&self) -> f64 {
        1.0 / (1.0 + self.gamma())
    }

    /// Reservoir density `lambda_plus / (lambda_plus + lambda_minus)` at each boundary vertex.
    pub fn reservoir_densities(&self) -> Vec<f64> {
        self.lambda_plus.iter().zip(&self.lambda_minus).map(|(p, m)| p / (p + m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> WeightedGraph {
        let e: Vec<_> = (0..n).map(|i| (i, i + 1, 1.0)).collect();
        WeightedGraph::from_indexed(n + 1, &e).unwrap()
    }

    #[test]
    fn derived_constants() {
        let g = path(3);
        let spec = BoundarySpec::new(&g, &[(3, 1.0, 3.0), (0, 2.0, 1.0)]).unwrap();
        assert_eq!(spec.vertices(), &[0, 3]);
        assert_eq!(spec.gamma(), 3.0);
        assert_eq!(spec.delta(), 0.25);
        assert_eq!(spec.gamma_prime(), 2.0);
    }

    #[test]
    fn rejects_bad_specs() {
        let g = path(3);
        assert_eq!(BoundarySpec::new(&g, &[(0, 1.0, 1.0), (1, 1.0, 1.0)]), Err(ExclusionError::BoundaryEdgePresent(0, 1)));
        assert_eq!(BoundarySpec::new(&g, &[(0, 0.0, 1.0)]), Err(ExclusionError::RateNonpositive { vertex: 0 }));
        assert_eq!(BoundarySpec::new(&g, &[]), Err(ExclusionError::EmptyBoundary));
        assert_eq!(BoundarySpec::new(&g, &[(9, 1.0, 1.0)]), Err(ExclusionError::UnknownVertex(9)));
    }
}
