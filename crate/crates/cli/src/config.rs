//! Plain-text `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::Path;

use resistor_sep::harness::{
    BoundaryExperimentConfig, Bundle, ExhaustionFamily, ExperimentConfig, InitialState, TimeWeight,
};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },
}

const KEYS: &[&str] = &[
    "experiment",
    "graph",
    "horizon",
    "alpha",
    "delta",
    "trajectories",
    "epsilon",
    "levels",
    "block_level",
    "bundle",
    "seed",
    "confidence",
    "probes",
    "initial",
    "lambda_plus",
    "lambda_minus",
    "weight",
];

/// A validated experiment description.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "experiment", rename_all = "lowercase")]
pub enum LoadedConfig {
    Ergodicity(ExperimentConfig),
    Boundary(BoundaryExperimentConfig),
}

impl LoadedConfig {
    pub fn seed(&self) -> u64 {
        match self {
            LoadedConfig::Ergodicity(c) => c.seed,
            LoadedConfig::Boundary(c) => c.seed,
        }
    }
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>, ConfigError> {
    let mut pairs = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::Parse { line, message: format!("expected `key = value`, found `{content}`") })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse { line, message: "empty key or value".into() });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse { line, message: format!("unknown key `{key}`") });
        }
        if pairs.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(ConfigError::Parse { line, message: format!("duplicate key `{key}`") });
        }
    }
    Ok(pairs)
}

struct Fields(BTreeMap<String, (usize, String)>);

impl Fields {
    fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::Validation { field: field.into(), message: message.into() }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(|(_, v)| v.as_str())
    }

    fn required(&self, key: &str) -> Result<&str, ConfigError> {
        self.raw(key).ok_or_else(|| Self::invalid(key, "missing required key"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| Self::invalid(key, format!("cannot parse `{v}`"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| Self::invalid(key, format!("cannot parse `{}`", s.trim()))))
                .collect(),
        }
    }

    fn in_open_unit(&self, key: &str, value: f64) -> Result<f64, ConfigError> {
        if value > 0.0 && value < 1.0 {
            Ok(value)
        } else {
            Err(Self::invalid(key, format!("{value} is outside (0, 1)")))
        }
    }

    fn positive(&self, key: &str, value: f64) -> Result<f64, ConfigError> {
        if value > 0.0 && value.is_finite() {
            Ok(value)
        } else {
            Err(Self::invalid(key, format!("{value} must be positive")))
        }
    }
}

/// Parses and validates a configuration. Defaults: `alpha = 0.5`,
/// `delta = 0.1`, `trajectories = 1000`, `epsilon = 0.5`.
pub fn parse_config(text: &str) -> Result<LoadedConfig, ConfigError> {
    let f = Fields(parse_pairs(text)?);
    let horizon = f.positive("horizon", f.required("horizon")?.parse().map_err(|_| Fields::invalid("horizon", "not a number"))?)?;
    let graph = f.required("graph")?;
    let threshold = f.positive("delta", f.parse("delta", 0.1)?)?;
    let trajectories: u64 = f.parse("trajectories", 1000)?;
    if trajectories == 0 {
        return Err(Fields::invalid("trajectories", "must be at least 1"));
    }
    let seed = f.parse("seed", 0u64)?;
    let confidence = f.in_open_unit("confidence", f.parse("confidence", 0.95)?)?;
    match f.raw("experiment").unwrap_or("ergodicity") {
        "ergodicity" => {
            let family = match graph {
                "sg" => ExhaustionFamily::Sg,
                "path" => ExhaustionFamily::Path,
                other => return Err(Fields::invalid("graph", format!("unknown exhaustion family `{other}`"))),
            };
            let eps: Vec<f64> = f.list("epsilon", vec![0.5])?;
            if let Some(e) = eps.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
                return Err(Fields::invalid("epsilon", format!("{e} is outside (0, 1]")));
            }
            let bundle_name = f.raw("bundle").unwrap_or("occupation");
            let bundle = Bundle::parse(bundle_name).ok_or_else(|| Fields::invalid("bundle", format!("unknown bundle `{bundle_name}`")))?;
            let all_probes = match f.raw("probes").unwrap_or("default") {
                "default" => false,
                "all" => true,
                other => return Err(Fields::invalid("probes", format!("expected `default` or `all`, found `{other}`"))),
            };
            let initial = match f.raw("initial").unwrap_or("sampled") {
                "sampled" => InitialState::Sampled,
                "packed" => InitialState::Packed,
                other => return Err(Fields::invalid("initial", format!("expected `sampled` or `packed`, found `{other}`"))),
            };
            let config = ExperimentConfig {
                family,
                levels: f.list("levels", vec![2, 3, 4])?,
                eps,
                block_level: f.parse("block_level", 0)?,
                bundle,
                threshold,
                horizon,
                alpha: f.in_open_unit("alpha", f.parse("alpha", 0.5)?)?,
                trajectories,
                seed,
                confidence,
                all_probes,
                initial,
            };
            config.validate().map_err(|e| Fields::invalid("levels", e.to_string()))?;
            Ok(LoadedConfig::Ergodicity(config))
        }
        "boundary" => {
            if graph != "sg" {
                return Err(Fields::invalid("graph", "the boundary experiment runs on `sg` only"));
            }
            let weight = match f.raw("weight").unwrap_or("constant") {
                "constant" => TimeWeight::Constant,
                "linear" => TimeWeight::Linear,
                other => return Err(Fields::invalid("weight", format!("expected `constant` or `linear`, found `{other}`"))),
            };
            let levels: Vec<usize> = f.list("levels", vec![1, 2, 3])?;
            if levels.is_empty() || levels.contains(&0) {
                return Err(Fields::invalid("levels", "levels must be positive"));
            }
            if trajectories < 2 {
                return Err(Fields::invalid("trajectories", "need at least 2 for a standard error"));
            }
            Ok(LoadedConfig::Boundary(BoundaryExperimentConfig {
                levels,
                lambda_plus: f.positive("lambda_plus", f.parse("lambda_plus", 1.0)?)?,
                lambda_minus: f.positive("lambda_minus", f.parse("lambda_minus", 1.0)?)?,
                weight,
                threshold,
                horizon,
                trajectories,
                seed,
                confidence,
            }))
        }
        other => Err(Fields::invalid("experiment", format!("expected `ergodicity` or `boundary`, found `{other}`"))),
    }
}
