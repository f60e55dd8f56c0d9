//! Flag > config file > default resolution.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::InputError;

/// Values from the optional JSON config file.
#[derive(Debug, Default)]
pub struct Settings {
    file: Map<String, Value>,
    /// Directory of the config file; relative paths inside it resolve against this.
    base: Option<PathBuf>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| InputError(format!("cannot read config {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| InputError(format!("config {} is not valid JSON: {e}", path.display())))?;
        let Value::Object(file) = value else {
            return Err(InputError(format!("config {} must be a JSON object", path.display())).into());
        };
        Ok(Self { file, base: path.parent().map(Path::to_path_buf) })
    }

    fn from_file<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match self.file.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| InputError(format!("config key {key:?}: {e}")).into()),
        }
    }

    /// The flag if given, else the config value, else `default`.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.from_file(key),
        }
    }

    /// An input file that must exist: flags resolve against the working directory,
    /// config entries against the config file's directory.
    pub fn input(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf> {
        self.input_opt(flag, key)?
            .ok_or_else(|| anyhow!(InputError(format!("missing input: pass --{} or set {key:?} in the config", key.replace('_', "-")))))
    }

    pub fn input_opt(&self, flag: Option<PathBuf>, key: &str) -> Result<Option<PathBuf>> {
        let path = match flag {
            Some(p) => p,
            None => match self.from_file::<PathBuf>(key)? {
                Some(p) => match &self.base {
                    Some(base) if p.is_relative() => base.join(p),
                    _ => p,
                },
                None => return Ok(None),
            },
        };
        if !path.is_file() {
            return Err(InputError(format!("input file {} does not exist", path.display())).into());
        }
        Ok(Some(path))
    }

    pub fn output_dir(&self, flag: Option<PathBuf>) -> Result<PathBuf> {
        let dir = match flag {
            Some(p) => p,
            None => match self.from_file::<PathBuf>("out")? {
                Some(p) => match &self.base {
                    Some(base) if p.is_relative() => base.join(p),
                    _ => p,
                },
                None => PathBuf::from("out"),
            },
        };
        if dir.exists() && !dir.is_dir() {
            return Err(InputError(format!("output path {} is not a directory", dir.display())).into());
        }
        Ok(dir)
    }
}

/// Grid sizes must be at least 2.
pub fn at_least_two(name: &str, value: usize) -> Result<usize> {
    if value < 2 {
        return Err(InputError(format!("{name} must be at least 2, got {value}")).into());
    }
    Ok(value)
}

pub fn positive(name: &str, value: f64) -> Result<f64> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(InputError(format!("{name} must be positive, got {value}")).into());
    }
    Ok(value)
}

/// Reads a grid table from `.csv` or `.json`.
pub fn read_grid(path: &Path) -> Result<mongeo::io::GridData> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        mongeo::io::GridData::from_json(&text)
    } else {
        mongeo::io::GridData::from_csv(&text)
    };
    parsed.map_err(|e| InputError(format!("{}: {e}", path.display())).into())
}
