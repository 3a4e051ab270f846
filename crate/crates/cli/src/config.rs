//! Defaults file shared by the CLI and the service.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use evolex_core::{DerivedColumn, ExplainRequest, TypeHint};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// Contents of a `--config` JSON file. Every section is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Partial explain request; explicit flags and request fields win.
    pub explain: Map<String, Value>,
    pub type_hints: HashMap<String, TypeHint>,
    /// Computed columns appended after loading.
    pub derived: Vec<DerivedColumn>,
    pub serve: ServeConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub host: Option<String>,
    pub port: Option<u16>,
    pub static_dir: Option<PathBuf>,
    pub upload_limit_mb: Option<usize>,
    pub workers: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let config: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            CliError::Usage(format!("config {}: {}", path.display(), FieldError::from(e)))
        })?;
        // surface bad explain defaults now rather than on first use
        merge_request(&config.explain, Map::new()).map_err(|e| {
            CliError::Usage(format!("config {}: explain.{}", path.display(), e))
        })?;
        Ok(config)
    }
}

/// A decoding failure tied to the field that caused it, when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: Option<String>,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.field {
            Some(field) => write!(f, "{field}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl<E: std::fmt::Display> From<serde_path_to_error::Error<E>> for FieldError {
    fn from(err: serde_path_to_error::Error<E>) -> Self {
        let path = err.path().to_string();
        FieldError {
            field: (path != "." && !path.is_empty()).then_some(path),
            message: err.inner().to_string(),
        }
    }
}

/// Overlay `fields` on `defaults` (one level deep for `opts`) and decode.
///
/// Errors name the offending field.
pub fn merge_request(
    defaults: &Map<String, Value>,
    fields: Map<String, Value>,
) -> Result<ExplainRequest, FieldError> {
    let mut merged = defaults.clone();
    for (key, value) in fields {
        match (merged.get_mut(&key), value) {
            (Some(Value::Object(base)), Value::Object(over)) if key == "opts" => {
                base.extend(over);
            }
            (_, value) => {
                merged.insert(key, value);
            }
        }
    }
    Ok(serde_path_to_error::deserialize(Value::Object(merged))?)
}
