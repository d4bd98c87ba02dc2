//! Run configuration: a versioned JSON document naming a model, its parameters, an
//! optional parameter sweep and the checks to enforce.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "model": { "name": "sequence-example", "params": { "variant": 1, "n": 2, "alpha": 1.0 } },
//!   "sweep": [ { "path": "alpha", "values": [1.0, 0.5, 0.1] } ],
//!   "checks": ["deltaS-two-sided-bound", "cqopt-eq-sqrt1-plus-deltaV2"],
//!   "tolerance_overrides": { "angle-route": 1e-6 },
//!   "assertions": [ { "quantity": "delta_s", "trend": "nonincreasing" } ],
//!   "output": { "path": "report.json", "format": "json" }
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};
use crate::registry;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelSpec,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    /// Check names to enforce; `None` enforces every check that applies to the model.
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub tolerance_overrides: BTreeMap<String, f64>,
    #[serde(default)]
    pub assertions: Vec<TrendAssertion>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

/// One swept parameter. `path` is a dot-separated key path into the model parameters.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub path: String,
    pub values: Vec<Value>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Deserialize, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Trend {
    Nondecreasing,
    Nonincreasing,
}

/// Monotonicity of a reported quantity along the sweep order.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TrendAssertion {
    pub quantity: String,
    pub trend: Trend,
    /// Allowed violation relative to `max(1, |value|)`.
    #[serde(default = "default_trend_tolerance")]
    pub tolerance: f64,
}

fn default_trend_tolerance() -> f64 {
    1e-12
}

/// A fully resolved sweep point.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub index: usize,
    pub params: Map<String, Value>,
    /// `(path, value)` of every swept parameter at this point.
    pub swept: Vec<(String, Value)>,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            context: format!("cannot read config {}", path.display()),
            source: e,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates a config. `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::ConfigParse {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::InvalidConfig(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let model = registry::find(&self.model.name).ok_or_else(|| CliError::UnknownModel(self.model.name.clone()))?;
        let names = self.checks.iter().flatten().chain(self.tolerance_overrides.keys());
        for name in names {
            if !model.check_names().contains(&name.as_str()) {
                return Err(CliError::UnknownCheck(name.clone()));
            }
        }
        for (name, tol) in &self.tolerance_overrides {
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(CliError::InvalidConfig(format!(
                    "tolerance for `{name}` must be positive"
                )));
            }
        }
        for axis in &self.sweep {
            if axis.path.is_empty() || axis.path.split('.').any(str::is_empty) {
                return Err(CliError::InvalidConfig(format!("invalid sweep path `{}`", axis.path)));
            }
            if axis.values.is_empty() {
                return Err(CliError::InvalidConfig(format!(
                    "sweep over `{}` has no values",
                    axis.path
                )));
            }
            if let Some(v) = axis.values.iter().find(|v| !v.is_number()) {
                return Err(CliError::InvalidConfig(format!(
                    "sweep path `{}` must take numeric values, got {v}",
                    axis.path
                )));
            }
            if let Some(existing) = lookup(&self.model.params, &axis.path) {
                if !existing.is_number() {
                    return Err(CliError::InvalidConfig(format!(
                        "sweep path `{}` refers to the non-numeric parameter {existing}",
                        axis.path
                    )));
                }
            }
        }
        for a in &self.assertions {
            if !crate::record::is_quantity(&a.quantity) {
                return Err(CliError::InvalidConfig(format!(
                    "unknown quantity `{}` in assertion",
                    a.quantity
                )));
            }
        }
        Ok(())
    }

    /// Cartesian product of the sweep axes (first axis slowest), merged into the model
    /// parameters. Without a sweep there is a single point.
    pub fn points(&self) -> CliResult<Vec<Point>> {
        let mut points = vec![Point {
            index: 0,
            params: self.model.params.clone(),
            swept: Vec::new(),
        }];
        for axis in &self.sweep {
            let mut next = Vec::with_capacity(points.len() * axis.values.len());
            for p in &points {
                for v in &axis.values {
                    let mut q = p.clone();
                    assign(&mut q.params, &axis.path, v.clone())?;
                    q.swept.push((axis.path.clone(), v.clone()));
                    next.push(q);
                }
            }
            points = next;
        }
        for (i, p) in points.iter_mut().enumerate() {
            p.index = i;
        }
        Ok(points)
    }
}

fn lookup<'a>(params: &'a Map<String, Value>, path: &str) -> Option<&'a Value> {
    let mut keys = path.split('.');
    let mut current = params.get(keys.next()?)?;
    for k in keys {
        current = current.as_object()?.get(k)?;
    }
    Some(current)
}

fn assign(params: &mut Map<String, Value>, path: &str, value: Value) -> CliResult<()> {
    let keys: Vec<&str> = path.split('.').collect();
    let (last, parents) = keys.split_last().expect("validated path");
    let mut current = params;
    for k in parents {
        let entry = current
            .entry(k.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
        current = entry
            .as_object_mut()
            .ok_or_else(|| CliError::InvalidConfig(format!("sweep path `{path}` crosses the non-object `{k}`")))?;
    }
    current.insert(last.to_string(), value);
    Ok(())
}
