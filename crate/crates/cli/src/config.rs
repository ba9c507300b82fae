//! Flat `key = value` config files. Keys are flag names without the leading
//! dashes; a flag given on the command line wins over the file.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};

/// Bad flags, bad config values and other caller mistakes. Exits with 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub const SEED_ENV: &str = "EVFOCUS_SEED";

#[derive(Debug, Default)]
pub struct Settings {
    path: Option<PathBuf>,
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

fn canonical(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, Some(path.to_path_buf()))
    }

    pub fn parse(text: &str, path: Option<PathBuf>) -> Result<Self> {
        let origin = path
            .as_ref()
            .map_or("config".to_string(), |p| p.display().to_string());
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("{origin}:{}: expected 'key = value'", i + 1)))?;
            let key = canonical(key);
            if key.is_empty() {
                return Err(usage(format!("{origin}:{}: empty key", i + 1)));
            }
            if values
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(usage(format!("{origin}:{}: duplicate key '{key}'", i + 1)));
            }
        }
        Ok(Self {
            path,
            values,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    /// Flag value if given, else the config entry for `key`, else `None`.
    pub fn get<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                let origin = self
                    .path
                    .as_ref()
                    .map_or("config".to_string(), |p| p.display().to_string());
                usage(format!("--{key}: invalid value '{raw}' in {origin}: {e}"))
            }),
        }
    }

    pub fn or<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(key, flag)?.unwrap_or(default))
    }

    /// Rejects config keys that no option consumed, which catches typos.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !used.contains(k.as_str()))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(usage(format!(
                "unknown config key(s): {}",
                unknown.join(", ")
            )))
        }
    }
}

/// Seed from the flag or config, else from `EVFOCUS_SEED`, else 0.
pub fn resolve_seed(settings: &Settings, flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = settings.get("seed", flag)? {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(raw) => raw
            .trim()
            .parse()
            .map_err(|e| usage(format!("{SEED_ENV}: invalid seed '{raw}': {e}"))),
        Err(_) => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let s = Settings::parse(
            "speed-um-s = 5000\nsteps=11 # comment\n\nc_pos = 0.3\n",
            None,
        )
        .unwrap();
        assert_eq!(s.or("speed-um-s", None, 1.0).unwrap(), 5000.0);
        assert_eq!(s.or("speed-um-s", Some(7.0), 1.0).unwrap(), 7.0);
        assert_eq!(s.or::<usize>("steps", None, 3).unwrap(), 11);
        assert_eq!(s.or("c-pos", None, 0.2).unwrap(), 0.3);
        assert_eq!(s.or("c-neg", None, 0.2).unwrap(), 0.2);
        s.finish().unwrap();
    }

    #[test]
    fn errors_name_the_key() {
        let s = Settings::parse("steps = many\n", None).unwrap();
        let err = s.get::<usize>("steps", None).unwrap_err().to_string();
        assert!(err.contains("--steps"), "{err}");
        assert!(Settings::parse("just words\n", None).is_err());
        assert!(Settings::parse("a = 1\na = 2\n", None).is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let s = Settings::parse("stpes = 3\n", None).unwrap();
        let _ = s.get::<usize>("steps", None).unwrap();
        let err = s.finish().unwrap_err().to_string();
        assert!(err.contains("stpes"), "{err}");
    }
}
