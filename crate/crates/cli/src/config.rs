//! `key = value` configuration files. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// Keys accepted in a configuration file.
pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "format",
    "threads",
    "method",
    "methods",
    "penalty",
    "alpha_n",
    "cov",
    "bootstrap_b",
    "return_periods",
    "location_fit",
    "cov_b",
    "scenario",
    "xi",
    "n",
    "trials",
    "grid",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parse `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| CliError::input(format!("{source}: line {}: {msg}", i + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
            let key = k.trim().to_ascii_lowercase().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(format!("unknown key '{}'", k.trim())));
            }
            if entries.insert(key, v.trim().to_string()).is_some() {
                return Err(err(format!("key '{}' given twice", k.trim())));
            }
        }
        Ok(Config { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// The flag value if given, else the parsed config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.parsed(key)?.unwrap_or(default)),
        }
    }

    /// The parsed config value for `key`, if present.
    pub fn parsed<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.get(key)
            .map(|s| s.parse::<T>().map_err(|_| CliError::input(format!("config key '{key}': cannot parse '{s}'"))))
            .transpose()
    }
}

/// Comma-separated list.
pub fn parse_list<T: FromStr>(s: &str, what: &str) -> CliResult<Vec<T>> {
    let out: CliResult<Vec<T>> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| CliError::input(format!("{what}: cannot parse '{t}'"))))
        .collect();
    let out = out?;
    if out.is_empty() {
        return Err(CliError::input(format!("{what}: empty list")));
    }
    Ok(out)
}

/// Shape grid: `lo:hi:step`, a comma list, or one value.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [lo, hi, step] => {
            let num = |t: &str| t.parse::<f64>().map_err(|_| CliError::input(format!("grid: cannot parse '{t}'")));
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(CliError::input("grid: need lo <= hi and step > 0"));
            }
            let k = ((hi - lo) / step + 1e-9).floor() as usize;
            if k > 100_000 {
                return Err(CliError::input("grid: more than 100000 points"));
            }
            Ok((0..=k).map(|i| lo + i as f64 * step).collect())
        }
        [_] => parse_list(s, "grid"),
        _ => Err(CliError::input(format!("grid: expected lo:hi:step or a list, got '{s}'"))),
    }
}
