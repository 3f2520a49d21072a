//! Run configuration files and `--a.b value` overrides.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::harness::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: OutputFormat::Csv,
        }
    }
}

fn default_label() -> String {
    "run".into()
}

/// Contents of a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_label")]
    pub label: String,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output: OutputOptions,
}

const TOP_LEVEL: [&str; 3] = ["label", "experiment", "output"];

/// Reads a `.json` or `.toml` file into a JSON tree.
pub fn load_value(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let is_toml = path.extension().is_some_and(|e| e == "toml");
    if is_toml {
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// JSON literal if `raw` parses as one, else a plain string.
pub fn parse_override_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `path` (dot separated) in `root`, creating intermediate tables.
pub fn apply_override(root: &mut Value, path: &str, value: Value) -> Result<()> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("malformed override key {path:?}")));
    }
    let mut cur = root;
    for (i, k) in keys.iter().enumerate() {
        if cur.is_null() {
            *cur = Value::Object(Map::new());
        }
        let obj = cur.as_object_mut().ok_or_else(|| {
            Error::Config(format!("override {path:?}: {} is not a table", keys[..i].join(".")))
        })?;
        if i + 1 == keys.len() {
            obj.insert(k.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(k.to_string()).or_insert(Value::Null);
    }
    unreachable!("path has at least one key")
}

/// Override path relative to an [`ExperimentConfig`], if it targets one.
pub fn experiment_path(path: &str) -> Option<&str> {
    match path.split_once('.') {
        Some(("experiment", rest)) => Some(rest),
        _ if TOP_LEVEL.contains(&path.split('.').next().unwrap_or("")) => None,
        _ => Some(path),
    }
}

/// Applies overrides to a whole run config; keys outside `label`/`output` go to
/// the experiment.
pub fn apply_run_overrides(root: &mut Value, overrides: &[(String, String)]) -> Result<()> {
    for (k, v) in overrides {
        let path = match experiment_path(k) {
            Some(p) => format!("experiment.{p}"),
            None => k.clone(),
        };
        apply_override(root, &path, parse_override_value(v))?;
    }
    Ok(())
}

pub fn run_config_from_value(v: Value) -> Result<RunConfig> {
    serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
}

/// Applies experiment overrides to an already built config.
pub fn override_experiment(
    cfg: &ExperimentConfig,
    overrides: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut v = serde_json::to_value(cfg).map_err(|e| Error::Config(e.to_string()))?;
    for (k, raw) in overrides {
        let p = experiment_path(k)
            .ok_or_else(|| Error::Config(format!("override {k:?} does not apply to a preset")))?;
        apply_override(&mut v, p, parse_override_value(raw))?;
    }
    serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))
}

/// `(key, raw value)` pairs from dotted flags.
pub type Overrides = Vec<(String, String)>;

/// Pulls `--a.b value` and `--a.b=value` pairs (flag names containing a dot) out
/// of `args`, leaving the rest for the regular parser.
pub fn split_dotted_args(args: Vec<OsString>) -> Result<(Vec<OsString>, Overrides)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let flag = a
            .to_str()
            .and_then(|s| s.strip_prefix("--"))
            .filter(|s| s.split('=').next().is_some_and(|k| k.contains('.')));
        match flag {
            Some(f) => {
                if let Some((k, v)) = f.split_once('=') {
                    overrides.push((k.to_string(), v.to_string()));
                } else {
                    let v = it
                        .next()
                        .and_then(|v| v.into_string().ok())
                        .ok_or_else(|| Error::Config(format!("--{f} needs a value")))?;
                    overrides.push((f.to_string(), v));
                }
            }
            None => rest.push(a),
        }
    }
    Ok((rest, overrides))
}
