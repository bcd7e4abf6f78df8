//! Settings resolution: command-line flags, then the JSON config file,
//! then built-in defaults.
//!
//! The config file is a JSON object. Each subcommand reads its own section
//! (`scene_gen`, `sample`, `trajectory`, `render`, `axis_gen`, `eval_ap`,
//! `eval_depth`, `eval_recon`, `eval_axis_curve`, `demo_trends`) keyed by
//! flag name with underscores, and falls back to top-level keys, so a
//! top-level `seed` applies everywhere.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::FileError;

#[derive(Debug, Default)]
pub struct Settings {
    root: Map<String, Value>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = crate::read_text(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| FileError::invalid(path, e))?;
        match v {
            Value::Object(root) => Ok(Self { root }),
            _ => Err(FileError::invalid(path, "config must be a JSON object").into()),
        }
    }

    fn lookup(&self, section: &str, key: &str) -> Option<&Value> {
        self.root
            .get(section)
            .and_then(|s| s.get(key))
            .or_else(|| self.root.get(key))
    }

    /// The config value of `key`, if any.
    pub fn get<T: DeserializeOwned>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.lookup(section, key)
            .map(|v| serde_json::from_value(v.clone()).with_context(|| format!("config key `{key}` in `{section}`")))
            .transpose()
    }

    /// Flag, else config, else `default`.
    pub fn pick<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(section, key)?.unwrap_or(default)),
        }
    }

    /// Flag, else config; an error names the missing flag.
    pub fn require<T: DeserializeOwned>(&self, section: &str, key: &str, flag: Option<T>) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => self
                .get(section, key)?
                .ok_or_else(|| anyhow::anyhow!("missing --{} (flag or config `{key}`)", key.replace('_', "-"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_config_over_defaults() {
        let s = Settings {
            root: serde_json::from_str(r#"{"seed": 4, "axis_gen": {"n": 7, "seed": 9}}"#).unwrap(),
        };
        assert_eq!(s.pick("axis_gen", "n", Some(2u32), 1).unwrap(), 2);
        assert_eq!(s.pick("axis_gen", "n", None, 1u32).unwrap(), 7);
        assert_eq!(s.pick("axis_gen", "seed", None, 0u64).unwrap(), 9);
        assert_eq!(s.pick("scene_gen", "seed", None, 0u64).unwrap(), 4);
        assert_eq!(s.pick("scene_gen", "k", None, 24usize).unwrap(), 24);
        assert!(s.pick::<u32>("axis_gen", "n", None, 0).is_ok());
        assert!(s.require::<String>("render", "output", None).is_err());
    }
}
