use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::{Error, Result};

/// Values from a JSON config file. Keys are long flag names; a section named
/// after the subcommand overrides top-level keys.
///
/// ```json
/// {"seed": 7, "gen": {"task": "add", "n": 100}}
/// ```
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    values: Map<String, Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>, section: &str) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let root: Value = serde_json::from_str(&text)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        let Value::Object(mut root) = root else {
            return Err(Error::Schema(format!("{}: config must be a JSON object", path.display())));
        };
        let mut values = Map::new();
        let nested = match root.remove(section) {
            Some(Value::Object(m)) => m,
            Some(_) => {
                return Err(Error::Schema(format!(
                    "{}: section {section:?} must be an object",
                    path.display()
                )))
            }
            None => Map::new(),
        };
        for (k, v) in root {
            if !v.is_object() {
                values.insert(k, v);
            }
        }
        values.extend(nested);
        Ok(Self { values })
    }

    pub fn get<T: DeserializeOwned>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => serde_json::from_value(v.clone())
                .map(Some)
                .map_err(|e| Error::json(format!("config key {key:?}"), e)),
        }
    }

    /// Flag (or its environment variable, already merged by the parser),
    /// else config file, else `default`.
    pub fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    pub fn require<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> Result<T> {
        match flag {
            Some(v) => Ok(v),
            None => self
                .get(key)?
                .ok_or_else(|| Error::invalid(format!("--{key} is required (flag, environment or config)"))),
        }
    }
}
