//! Canonical JSON graph documents.
//!
//! Struct fields are declared in alphabetical order so serialized keys come out sorted.

use serde::{Deserialize, Serialize};

use super::{GraphError, WeightedGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub c: f64,
    pub u: u64,
    pub v: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEntry {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub v: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<BoundaryEntry>>,
    pub edges: Vec<EdgeEntry>,
    pub vertices: Vec<u64>,
}

impl GraphDocument {
    pub fn from_graph(g: &WeightedGraph, boundary: Option<Vec<BoundaryEntry>>) -> Self {
        let edges = g
            .edges()
            .iter()
            .map(|&(u, v, c)| EdgeEntry { c, u: g.id(u), v: g.id(v) })
            .collect();
        Self { boundary, edges, vertices: g.ids().to_vec() }
    }

    pub fn to_graph(&self) -> Result<WeightedGraph, GraphError> {
        let edges: Vec<(u64, u64, f64)> = self.edges.iter().map(|e| (e.u, e.v, e.c)).collect();
        WeightedGraph::from_parts(self.vertices.clone(), &edges)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_are_sorted_and_round_trip() {
        let g = WeightedGraph::from_edges(&[(4, 7, 0.1), (7, 9, 2.5)]).unwrap();
        let doc = GraphDocument::from_graph(
            &g,
            Some(vec![BoundaryEntry { lambda_minus: 1.0, lambda_plus: 2.0, v: 4 }]),
        );
        let text = doc.to_json();
        let b = text.find("\"boundary\"").unwrap();
        let e = text.find("\"edges\"").unwrap();
        let v = text.find("\"vertices\"").unwrap();
        assert!(b < e && e < v);
        let back = GraphDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_graph().unwrap(), g);
    }

    #[test]
    fn boundary_section_is_optional() {
        let doc = GraphDocument::from_json(r#"{"vertices":[0,1],"edges":[{"u":0,"v":1,"c":1.0}]}"#).unwrap();
        assert!(doc.boundary.is_none());
        assert_eq!(doc.to_graph().unwrap().vertex_count(), 2);
        assert!(GraphDocument::from_json("{").is_err());
    }
}
