//! Optional TOML config file. Command-line flags override every key.
//!
//! ```toml
//! threshold = 0.9
//! repeats = 3
//! temperatures = [0.7, 1.0]
//! endpoint = "http://127.0.0.1:8080/generate"
//! seed = 42
//! workers = 4
//! ```

use std::path::Path;

use langmix_core::metrics::Ratio;
use langmix_core::ratio::parse_decimal;
use serde::Deserialize;

use crate::error::{AppError, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub threshold: Option<toml::Value>,
    pub lpr_tau: Option<toml::Value>,
    pub repeats: Option<u32>,
    pub temperatures: Option<Vec<f64>>,
    pub endpoint: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub model: Option<String>,
    pub method: Option<String>,
    pub k: Option<usize>,
    pub langs: Option<String>,
    pub retries: Option<u32>,
    pub timeout_secs: Option<u64>,
}

impl Config {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            AppError::parse(path, line, e.message())
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::parse(&crate::formats::read_text(p)?, p),
            None => Ok(Self::default()),
        }
    }

    pub fn threshold(&self) -> Result<Option<Ratio>> {
        self.threshold.as_ref().map(value_threshold).transpose().map_err(AppError::Usage)
    }

    pub fn lpr_tau(&self) -> Result<Option<Ratio>> {
        self.lpr_tau.as_ref().map(value_threshold).transpose().map_err(AppError::Usage)
    }
}

fn value_threshold(v: &toml::Value) -> Result<Ratio, String> {
    match v {
        toml::Value::Float(f) => parse_threshold(&format!("{f}")),
        toml::Value::Integer(i) => parse_threshold(&i.to_string()),
        toml::Value::String(s) => parse_threshold(s),
        other => Err(format!("threshold must be a number, got {other}")),
    }
}

/// Parses a decimal in `[0, 1]` exactly.
pub fn parse_threshold(s: &str) -> Result<Ratio, String> {
    let r = parse_decimal(s).ok_or_else(|| format!("not a plain decimal: {s:?}"))?;
    if r > Ratio::from_integer(1) {
        return Err(format!("threshold {s} is above 1"));
    }
    Ok(r)
}
