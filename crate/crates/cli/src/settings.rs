//! Flat `key = value` settings: defaults, then a config file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use trajdiff_dit::parse_flat;

use crate::error::{CliError, PathContext, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub values: BTreeMap<String, String>,
}

impl Settings {
    /// Reads `config` (if any), then applies `--set key=value` pairs and the
    /// named flag values in order; later sources win.
    pub fn load(config: Option<&Path>, sets: &[String], flags: &[(&str, Option<String>)]) -> Result<Self> {
        let mut values = BTreeMap::new();
        if let Some(path) = config {
            let text = fs::read_to_string(path).at(path)?;
            values = parse_flat(&text)?;
        }
        for s in sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("--set expects key=value, got {s:?}")))?;
            values.insert(k.trim().to_string(), v.trim().to_string());
        }
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Ok(Self { values })
    }

    /// Rejects keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.values.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(CliError::usage(format!("unknown setting {k:?}"))),
            None => Ok(()),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::usage(format!("bad value {v:?} for {key}"))),
        }
    }

    pub fn get_str(&self, key: &str, default: &str) -> String {
        self.values.get(key).cloned().unwrap_or_else(|| default.to_string())
    }

    /// Entries whose key is in `keys`.
    pub fn subset(&self, keys: &[&str]) -> BTreeMap<String, String> {
        self.values
            .iter()
            .filter(|(k, _)| keys.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}
