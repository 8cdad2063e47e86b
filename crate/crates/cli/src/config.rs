//! `key = value` configuration files. Command-line flags win over the file,
//! and the file wins over built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "data",
    "k",
    "method",
    "clustering",
    "restarts",
    "min_per_sense",
    "max_per_sentence",
    "selection_size",
    "sample_size",
    "min_tokens",
    "max_tokens",
    "case_fold",
    "seconds_per_sentence",
    "addr",
    "adjudicator",
];

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
    origin: String,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Blank lines and `#` comments are ignored; keys may use `-` or `_`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(ConfigError(format!(
                    "{origin}:{}: expected key = value",
                    i + 1
                )));
            };
            let key = key.trim().replace('-', "_");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                bail!(ConfigError(format!(
                    "{origin}:{}: unknown key {key:?}",
                    i + 1
                )));
            }
            values.insert(key, value.trim().trim_matches('"').to_string());
        }
        Ok(Config {
            values,
            origin: origin.to_string(),
        })
    }

    /// Flag value if given, else the config value, else `default`.
    pub fn pick<T: FromStr>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        Ok(self.pick_opt(key, None)?.unwrap_or(default))
    }

    pub fn pick_opt<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw.parse().map(Some).map_err(|e| {
                ConfigError(format!("{}: invalid {key} {raw:?}: {e}", self.origin)).into()
            }),
            None => Ok(None),
        }
    }
}

/// A malformed configuration; reported as a validation failure.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        let c = Config::parse("# comment\nseed = 7\nmax-per-sentence=8\n", "t").unwrap();
        assert_eq!(c.pick("seed", None, 42u64).unwrap(), 7);
        assert_eq!(c.pick("seed", Some(1u64), 42).unwrap(), 1);
        assert_eq!(c.pick("k", None, 2usize).unwrap(), 2);
        assert_eq!(c.pick("max_per_sentence", None, 16usize).unwrap(), 8);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(Config::parse("colour = red", "t").is_err());
        assert!(Config::parse("seed", "t").is_err());
        let c = Config::parse("seed = abc", "t").unwrap();
        assert!(c.pick::<u64>("seed", None, 42).is_err());
    }
}
