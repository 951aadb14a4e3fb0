//! Parameter resolution: command-line flags override config-file values,
//! which override built-in defaults. The effective values are echoed into
//! the run report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::CliError;

/// Flat `key = value` config file; `#` starts a comment line.
pub fn parse_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(CliError::Config(format!(
                "{} line {}: expected key=value, got {trimmed:?}",
                path.display(),
                line_no + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Three-layer parameter lookup with a typed-echo of every resolved value.
pub struct Params {
    file: BTreeMap<String, String>,
    effective: BTreeMap<String, serde_json::Value>,
}

impl Params {
    pub fn new(config_path: Option<&PathBuf>) -> Result<Self, CliError> {
        let file = match config_path {
            Some(p) => parse_config_file(p)?,
            None => BTreeMap::new(),
        };
        Ok(Self {
            file,
            effective: BTreeMap::new(),
        })
    }

    /// Everything resolved so far, for the report's config echo.
    pub fn effective(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.effective
    }

    pub fn note(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.effective.insert(key.to_string(), value.into());
    }

    fn from_file<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.file.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                CliError::Config(format!("config key {key}: cannot parse {raw:?}"))
            }),
        }
    }

    pub fn resolve<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T: FromStr + Clone + Into<serde_json::Value>,
    {
        let value = match flag {
            Some(v) => v,
            None => self.from_file::<T>(key)?.unwrap_or(default),
        };
        self.effective.insert(key.to_string(), value.clone().into());
        Ok(value)
    }

    /// Like [`resolve`] but without a default; `None` when absent.
    pub fn resolve_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T: FromStr + Clone + Into<serde_json::Value>,
    {
        let value = match flag {
            Some(v) => Some(v),
            None => self.from_file::<T>(key)?,
        };
        if let Some(v) = &value {
            self.effective.insert(key.to_string(), v.clone().into());
        }
        Ok(value)
    }
}

/// Parses `a:b` (inclusive) or a comma list into integers.
pub fn parse_usize_list(raw: &str) -> Result<Vec<usize>, CliError> {
    let bad = |_| CliError::Config(format!("cannot parse integer list {raw:?}"));
    if let Some((a, b)) = raw.split_once(':') {
        let a: usize = a.trim().parse().map_err(bad)?;
        let b: usize = b.trim().parse().map_err(bad)?;
        if a > b {
            return Err(CliError::Config(format!("empty range {raw:?}")));
        }
        return Ok((a..=b).collect());
    }
    raw.split(',')
        .map(|tok| tok.trim().parse::<usize>().map_err(bad))
        .collect()
}
