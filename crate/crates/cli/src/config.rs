//! Flag and config-file handling.
//!
//! A config file (TOML, or JSON when the name ends in `.json`) holds the same
//! keys as the long flags, in snake_case or kebab-case. Top-level keys apply
//! to every command; a table named after the command (`[fit]`, `[bench]`, ...)
//! overrides them for that command. Flags given on the command line override
//! both.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

const COMMANDS: [&str; 5] = ["fit", "cv", "simulate", "bench", "eval"];

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct Common {
    /// Base random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: number of processors).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Directory receiving every output file.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Name of the label column.
    #[arg(long)]
    pub label: Option<String>,
    /// Suppress progress and summary printing.
    #[arg(long)]
    #[serde(default)]
    pub quiet: bool,
    /// TOML or JSON file with default values for these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

impl Common {
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or("label")
    }

    /// Creates the output directory and returns the path of `name` inside it.
    pub fn output_path(&self, name: &str) -> Result<PathBuf, CliError> {
        let dir = self.output_dir();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::output(&dir, e))?;
        Ok(dir.join(name))
    }
}

fn read_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config `{}`: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text).map_err(CliError::config)
    } else {
        toml::from_str(&text).map_err(CliError::config)
    };
    match parsed? {
        Value::Object(map) => Ok(Value::Object(map)),
        _ => Err(CliError::Config(format!("config `{}` must be a table of keys", path.display()))),
    }
}

fn normalize(map: Map<String, Value>) -> Map<String, Value> {
    map.into_iter().map(|(k, v)| (k.replace('-', "_"), v)).collect()
}

/// Values from the file for `command`: shared keys overlaid by the
/// command's own table.
fn file_layer(file: Value, command: &str) -> Map<String, Value> {
    let Value::Object(top) = file else { return Map::new() };
    let top = normalize(top);
    let mut merged: Map<String, Value> =
        top.iter().filter(|(k, _)| !COMMANDS.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect();
    if let Some(Value::Object(section)) = top.get(command) {
        merged.extend(normalize(section.clone()));
    }
    merged
}

/// Fills every flag left unset on the command line from the config file.
pub fn resolve<T: Serialize + DeserializeOwned>(cli: &T, config: Option<&Path>, command: &str) -> Result<T, CliError> {
    let Some(path) = config else {
        return serde_json::from_value(serde_json::to_value(cli).map_err(CliError::config)?).map_err(CliError::config);
    };
    let mut merged = file_layer(read_file(path)?, command);
    let Value::Object(flags) = serde_json::to_value(cli).map_err(CliError::config)? else {
        return Err(CliError::Config("flags did not serialize to a table".into()));
    };
    for (key, value) in flags {
        // Unset flags serialize as null (or false for switches).
        if !matches!(value, Value::Null | Value::Bool(false)) {
            merged.insert(key, value);
        }
    }
    serde_json::from_value(Value::Object(merged))
        .map_err(|e| CliError::Config(format!("config `{}`: {e}", path.display())))
}
