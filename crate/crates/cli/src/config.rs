//! Flat `key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Command-line overrides
//! replace file values. Every key read by an experiment, default or not,
//! is echoed into the report, and keys nobody reads are rejected.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    read: RefCell<BTreeSet<String>>,
    effective: RefCell<BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| ConfigError(format!("line {}: expected `key = value`, got `{}`", i + 1, raw.trim())))?;
            let k = k.trim();
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(ConfigError(format!("line {}: invalid key `{k}`", i + 1)));
            }
            if values.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(ConfigError(format!("line {}: duplicate key `{k}`", i + 1)));
            }
        }
        Ok(Self { values, ..Default::default() })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.values.insert(key.to_string(), value.to_string());
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.read.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    fn record(&self, key: &str, value: String) {
        self.effective.borrow_mut().insert(key.to_string(), value);
    }

    /// Value of `key` or `default`.
    pub fn get<T: FromStr + ToString>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        let v = match self.raw(key) {
            Some(s) => s.parse().map_err(|_| ConfigError(format!("`{key}`: cannot parse `{s}`")))?,
            None => default,
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String, ConfigError> {
        self.get(key, default.to_string())
    }

    /// Comma-separated nonempty list.
    pub fn list<T: FromStr + ToString + Clone>(&self, key: &str, default: &[T]) -> Result<Vec<T>, ConfigError> {
        let v: Vec<T> = match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| ConfigError(format!("`{key}`: cannot parse `{x}`"))))
                .collect::<Result<_, _>>()?,
            None => default.to_vec(),
        };
        if v.is_empty() {
            return Err(ConfigError(format!("`{key}`: empty list")));
        }
        self.record(key, v.iter().map(T::to_string).collect::<Vec<_>>().join(","));
        Ok(v)
    }

    /// Inclusive integer range `lo..=hi` in steps of `step`.
    pub fn range(&self, prefix: &str, default: (usize, usize, usize)) -> Result<Vec<usize>, ConfigError> {
        let lo = self.get(&format!("{prefix}_min"), default.0)?;
        let hi = self.get(&format!("{prefix}_max"), default.1)?;
        let step = self.get(&format!("{prefix}_step"), default.2)?;
        if step == 0 || lo > hi {
            return Err(ConfigError(format!("`{prefix}`: empty range {lo}..={hi} step {step}")));
        }
        Ok((lo..=hi).step_by(step).collect())
    }

    /// Reject keys that no experiment read.
    pub fn finish(&self) -> Result<(), ConfigError> {
        let read = self.read.borrow();
        let unknown: Vec<&str> = self.values.keys().filter(|k| !read.contains(*k)).map(String::as_str).collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(format!("unknown configuration keys: {}", unknown.join(", "))))
        }
    }

    /// Effective values of every key read so far.
    pub fn echo(&self) -> BTreeMap<String, String> {
        self.effective.borrow().clone()
    }
}
