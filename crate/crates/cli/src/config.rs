//! Flat `key = value` configuration with dotted section names.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are skipped.
//! Every key read by a run is recorded with its resolved value (defaults
//! included), and keys nobody read are reported as schema errors.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error("config error: {0}")]
    Schema(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Schema(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub fn runtime(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

pub struct Config {
    raw: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
    resolved: RefCell<BTreeMap<String, String>>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '-')
        })
}

impl Config {
    pub fn parse(file: &str, text: &str) -> Result<Self, CliError> {
        let mut raw = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let err = |msg: String| CliError::Parse {
                file: file.to_string(),
                line: i + 1,
                msg,
            };
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(err(format!("expected 'key = value', got '{line}'")));
            };
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(err(format!("invalid key '{k}'")));
            }
            if v.is_empty() {
                return Err(err(format!("empty value for '{k}'")));
            }
            if raw.insert(k.to_string(), v.to_string()).is_some() {
                return Err(err(format!("duplicate key '{k}'")));
            }
        }
        Ok(Config {
            raw,
            used: RefCell::default(),
            resolved: RefCell::default(),
        })
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.raw.insert(key.to_string(), value.to_string());
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    fn record(&self, key: &str, value: &str) {
        self.used.borrow_mut().insert(key.to_string());
        self.resolved.borrow_mut().insert(key.to_string(), value.to_string());
    }

    pub fn text(&self, key: &str) -> Option<String> {
        let v = self.raw.get(key)?.clone();
        self.record(key, &v);
        Some(v)
    }

    pub fn require_text(&self, key: &str) -> Result<String, CliError> {
        self.text(key)
            .ok_or_else(|| CliError::Schema(format!("missing required key '{key}'")))
    }

    fn convert<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
        v.parse::<T>()
            .map_err(|_| CliError::Schema(format!("bad value for '{key}': '{v}'")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.text(key).map(|v| Self::convert(key, &v)).transpose()
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        Self::convert(key, &self.require_text(key)?)
    }

    pub fn or<T: FromStr + Display>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.get(key)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, &default.to_string());
                Ok(default)
            }
        }
    }

    /// Comma-separated numbers.
    pub fn vector(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        let Some(v) = self.text(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|s| Self::convert::<f64>(key, s.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Records a value computed from other keys, for the artifact's record.
    pub fn note(&self, key: &str, value: impl Display) {
        self.resolved.borrow_mut().insert(key.to_string(), value.to_string());
    }

    /// The resolved configuration; fails on keys that were never read.
    pub fn finish(&self) -> Result<BTreeMap<String, String>, CliError> {
        let used = self.used.borrow();
        let unknown: Vec<&String> = self.raw.keys().filter(|k| !used.contains(*k)).collect();
        if !unknown.is_empty() {
            let list: Vec<&str> = unknown.iter().map(|s| s.as_str()).collect();
            return Err(CliError::Schema(format!("unknown or unused keys: {}", list.join(", "))));
        }
        Ok(self.resolved.borrow().clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_tracks_keys() {
        let c = Config::parse("t", "# comment\nrun = solve\ngame.epsilon = 0.1 # trailing\n\n").unwrap();
        assert_eq!(c.require_text("run").unwrap(), "solve");
        assert_eq!(c.require::<f64>("game.epsilon").unwrap(), 0.1);
        assert_eq!(c.or("solve.tol", 1e-6).unwrap(), 1e-6);
        let r = c.finish().unwrap();
        assert_eq!(r["solve.tol"], "0.000001");
    }

    #[test]
    fn rejects_malformed_lines() {
        for text in ["run solve", "Run = x", "a..b = 1", "a = ", "a = 1\na = 2"] {
            let e = Config::parse("t", text).err().expect(text);
            assert_eq!(e.exit_code(), 2);
        }
    }

    #[test]
    fn unread_keys_are_schema_errors() {
        let c = Config::parse("t", "run = solve\ngame.epsiln = 0.1").unwrap();
        c.text("run");
        let e = c.finish().unwrap_err();
        assert!(e.to_string().contains("game.epsiln"));
    }

    #[test]
    fn missing_key_is_named() {
        let c = Config::parse("t", "run = solve").unwrap();
        let e = c.require::<f64>("game.epsilon").unwrap_err();
        assert!(e.to_string().contains("game.epsilon"));
        assert_eq!(e.exit_code(), 2);
    }
}
