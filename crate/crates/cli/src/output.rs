//! Graph loading, run manifests and CSV/JSON writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use resistor_sep::exclusion::BoundarySpec;
use resistor_sep::graph::{GraphDocument, WeightedGraph};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

/// A graph file with its optional reservoirs and content hash.
pub struct LoadedGraph {
    pub graph: WeightedGraph,
    pub boundary: Option<BoundarySpec>,
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Hash of the canonical (re-serialized) document, so formatting does not matter.
pub fn graph_hash(doc: &GraphDocument) -> String {
    sha256_hex(doc.to_json().as_bytes())
}

pub fn load_graph(path: &Path) -> Result<LoadedGraph> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let doc = GraphDocument::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let graph = doc.to_graph()?;
    let boundary = match &doc.boundary {
        Some(entries) if !entries.is_empty() => Some(BoundarySpec::from_entries(&graph, entries)?),
        _ => None,
    };
    Ok(LoadedGraph { graph, boundary, hash: graph_hash(&doc) })
}

/// 17 significant digits; round-trips every finite `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Provenance of one command.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    pub seed: Option<u64>,
    pub graph_hash: Option<String>,
    pub tolerances: Value,
    pub timestamp: u64,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(seed: Option<u64>, graph_hash: Option<String>, tolerances: Value) -> Self {
        Self {
            schema: SCHEMA,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            seed,
            graph_hash,
            tolerances,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            outputs: Vec::new(),
        }
    }

    /// The deterministic part, embedded in every machine output.
    pub fn provenance(&self) -> Value {
        json!({
            "tool": self.tool,
            "version": self.version,
            "seed": self.seed,
            "graph_hash": self.graph_hash,
            "tolerances": self.tolerances,
        })
    }
}

/// Collects outputs and writes the manifest next to the first one.
pub struct Sink {
    pub manifest: RunManifest,
}

impl Sink {
    pub fn new(manifest: RunManifest) -> Self {
        Self { manifest }
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.outputs.push(path.to_path_buf());
        Ok(())
    }

    /// Writes `{schema, provenance, ...body}` as pretty JSON.
    pub fn write_json(&mut self, path: &Path, body: Value) -> Result<()> {
        let mut doc = json!({ "schema": SCHEMA, "provenance": self.manifest.provenance() });
        if let (Value::Object(target), Value::Object(fields)) = (&mut doc, body) {
            target.extend(fields);
        }
        self.write(path, &(serde_json::to_string_pretty(&doc)? + "\n"))
    }

    pub fn finish(self) -> Result<()> {
        let Some(first) = self.manifest.outputs.first() else { return Ok(()) };
        let mut name = first.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        let path = first.with_file_name(name);
        std::fs::write(&path, serde_json::to_string_pretty(&self.manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 5e-324, 1.7976931348623157e308, -2.5] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(f64::NAN), "nan");
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = GraphDocument::from_json(r#"{"vertices":[0,1],"edges":[{"u":0,"v":1,"c":1.0}]}"#).unwrap();
        let b = GraphDocument::from_json("{ \"edges\": [ {\"c\": 1, \"u\": 0, \"v\": 1} ], \"vertices\": [0, 1] }").unwrap();
        assert_eq!(graph_hash(&a), graph_hash(&b));
        assert_eq!(graph_hash(&a).len(), 64);
    }
}
