//! Parameter resolution: command-line flag, then config file, then default.
//! Every resolved value is recorded so outputs can echo the full parameter set.

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub struct Resolver {
    section: Option<toml::Table>,
    global: toml::Table,
    echo: Map<String, Value>,
}

impl Resolver {
    /// `section` names the subcommand; keys in a table of that name override
    /// top-level keys.
    pub fn load(path: Option<&Path>, section: &str) -> Result<Self> {
        let mut global = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("cannot read config {}", p.display()))?;
                text.parse::<toml::Table>()
                    .with_context(|| format!("invalid config {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        let section = match global.remove(section) {
            Some(toml::Value::Table(t)) => Some(t),
            Some(_) => anyhow::bail!("config key `{section}` must be a table"),
            None => None,
        };
        global.retain(|_, v| !v.is_table());
        Ok(Self { section, global, echo: Map::new() })
    }

    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: DeserializeOwned + Serialize,
    {
        let value = match flag {
            Some(v) => v,
            None => match self.lookup(key) {
                Some(raw) => raw
                    .clone()
                    .try_into()
                    .with_context(|| format!("config value for `{key}` has the wrong type"))?,
                None => default,
            },
        };
        self.echo.insert(key.to_string(), serde_json::to_value(&value)?);
        Ok(value)
    }

    fn lookup(&self, key: &str) -> Option<&toml::Value> {
        self.section.as_ref().and_then(|s| s.get(key)).or_else(|| self.global.get(key))
    }

    /// Resolved parameters, keyed by flag name.
    pub fn echo(&self) -> Value {
        Value::Object(self.echo.clone())
    }
}
