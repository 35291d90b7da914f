//! `key = value` configuration files.
//!
//! One pair per line; `#` starts a comment; blank lines are ignored. Keys
//! are the long flag names, with `_` and `-` interchangeable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{CliError, Result};

pub const KEYS: &[&str] = &[
    "seed",
    "output-dir",
    "draws",
    "grid",
    "reps",
    "n",
    "nodes",
    "svg",
    "dist",
    "t",
    "theta",
    "a0",
    "a1",
    "c1",
    "c0",
    "gamma",
    "logit-intercept",
    "sigma-t",
    "sigma-c",
    "estimators",
];

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl ConfigFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CliError::Config {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, found {line:?}")))?;
            let key = normalize(key);
            if !KEYS.contains(&key.as_str()) {
                return Err(err(format!("unknown key {key:?}")));
            }
            if entries
                .insert(key.clone(), (i + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(err(format!("duplicate key {key:?}")));
            }
        }
        Ok(ConfigFile {
            path: path.to_path_buf(),
            entries,
        })
    }

    /// Parsed value for `key`, if present.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, value)) => value
                .parse()
                .map(Some)
                .map_err(|e: T::Err| CliError::Config {
                    path: self.path.clone(),
                    line: *line,
                    message: format!("invalid value {value:?} for {key}: {e}"),
                }),
        }
    }

    pub fn get_with<T>(
        &self,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, value)) => parse(value).map(Some).map_err(|message| CliError::Config {
                path: self.path.clone(),
                line: *line,
                message: format!("invalid value {value:?} for {key}: {message}"),
            }),
        }
    }
}

/// A real number or a multiple of `pi` such as `pi/2`, `3pi/4` or `0.5*pi`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let s = s.trim().to_ascii_lowercase().replace(' ', "");
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("expected a number or a multiple of pi, found {s:?}");
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.to_string(), d.parse::<f64>().map_err(|_| bad())?),
        None => (s.clone(), 1.0),
    };
    let coef = num
        .strip_suffix("pi")
        .ok_or_else(bad)?
        .trim_end_matches('*');
    let coef = match coef {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(coef * std::f64::consts::PI / den)
}

/// Comma-separated reals.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect()
}

pub fn parse_triple(s: &str) -> Result<[f64; 3], String> {
    let v = parse_list(s)?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected 3 values, found {}", v.len()))
}

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(format!("expected true or false, found {other:?}")),
    }
}
