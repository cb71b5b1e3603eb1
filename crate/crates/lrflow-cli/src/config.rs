//! `key = value` run configuration.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// Parsed configuration with the original text kept for the output header.
#[derive(Debug, Clone)]
pub struct RunConfig {
    entries: BTreeMap<String, Entry>,
    raw: String,
}

impl RunConfig {
    /// Parses `text`, one `key = value` per line, `#` to end of line is a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| CliError::config_at(line_no, format!("expected `key = value`, found `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(CliError::config_at(line_no, format!("bad key `{key}`")));
            }
            if value.is_empty() {
                return Err(CliError::config_at(line_no, format!("key `{key}` has no value")));
            }
            if let Some(prev) = entries.insert(key.to_string(), Entry { value: value.to_string(), line: line_no }) {
                return Err(CliError::config_at(line_no, format!("key `{key}` already set on line {}", prev.line)));
            }
        }
        Ok(Self { entries, raw: text.to_string() })
    }

    pub fn raw_lines(&self) -> impl Iterator<Item = &str> {
        self.raw.lines()
    }

    /// Rejects keys outside `allowed` and reports missing `required` keys.
    pub fn check_keys(&self, allowed: &[&str], required: &[&str]) -> Result<(), CliError> {
        for (key, e) in &self.entries {
            if !allowed.contains(&key.as_str()) {
                return Err(CliError::config_at(e.line, format!("unknown key `{key}`")));
            }
        }
        for key in required {
            if !self.entries.contains_key(*key) {
                return Err(CliError::config(format!("missing required key `{key}`")));
            }
        }
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        self.entries
            .get(key)
            .map(|e| e.value.as_str())
            .ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let e = self.entries.get(key).ok_or_else(|| CliError::config(format!("missing required key `{key}`")))?;
        e.value
            .parse()
            .map_err(|_| CliError::config_at(e.line, format!("cannot parse `{}` for key `{key}`", e.value)))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        if self.has(key) {
            self.get(key)
        } else {
            Ok(default)
        }
    }

    /// A finite real value.
    pub fn real(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.get(key)?;
        if !v.is_finite() {
            return Err(CliError::config_at(self.entries[key].line, format!("`{key}` must be finite")));
        }
        Ok(v)
    }

    pub fn real_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        if self.has(key) {
            self.real(key)
        } else {
            Ok(default)
        }
    }

    /// Integer point written as `x1,x2,…` or `x1 x2 …`.
    pub fn point(&self, key: &str, d: usize) -> Result<Vec<i64>, CliError> {
        let e = self.entries.get(key).ok_or_else(|| CliError::config(format!("missing required key `{key}`")))?;
        let parts: Result<Vec<i64>, _> =
            e.value.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect();
        let p = parts.map_err(|_| CliError::config_at(e.line, format!("cannot parse point `{}`", e.value)))?;
        if p.len() != d {
            return Err(CliError::config_at(e.line, format!("`{key}` has {} coordinates, expected d = {d}", p.len())));
        }
        Ok(p)
    }

    /// One of `choices`, or `default` when absent.
    pub fn choice<'a>(&self, key: &str, choices: &[&'a str], default: &'a str) -> Result<&'a str, CliError> {
        let Some(e) = self.entries.get(key) else {
            return Ok(default);
        };
        choices.iter().copied().find(|c| *c == e.value).ok_or_else(|| {
            CliError::config_at(e.line, format!("`{key}` must be one of {}, got `{}`", choices.join(", "), e.value))
        })
    }
}
