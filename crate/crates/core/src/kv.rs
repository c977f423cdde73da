//! Flat `key = value` text format shared by run configs and gridworld files.
//!
//! One assignment per line, dotted keys, `#` starts a comment. List values are
//! separated by commas and/or whitespace and may be wrapped in `[...]`. A key
//! written with a trailing `[]` (e.g. `raeb.alpha_scale[] = 2.5`) is the same
//! key as without it.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvDoc {
    entries: BTreeMap<String, String>,
}

fn normalize_key(key: &str) -> String {
    key.trim().trim_end_matches("[]").to_string()
}

impl KvDoc {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut doc = KvDoc::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    origin: origin.into(),
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let key = normalize_key(k);
            if key.is_empty() {
                return Err(Error::Parse {
                    origin: origin.into(),
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            if doc.entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Parse {
                    origin: origin.into(),
                    line: i + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(doc)
    }

    /// Parse a `key=value` override as given on the command line.
    pub fn parse_override(spec: &str) -> Result<(String, String)> {
        let (k, v) = spec
            .split_once('=')
            .ok_or_else(|| Error::config(spec, "override must look like key=value"))?;
        Ok((normalize_key(k), v.trim().to_string()))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(normalize_key(key), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::config(key, format!("`{value}` is not a number")))
}

pub fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::config(key, format!("`{value}` is not a nonnegative integer")))
}

pub fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .trim()
        .parse::<u64>()
        .map_err(|_| Error::config(key, format!("`{value}` is not a nonnegative integer")))
}

pub fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let inner = value.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

pub fn format_f64_list(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}
