//! Configuration resolution: an optional TOML file with command-line flags
//! layered on top. Flags win.

use std::path::Path;

use serde::de::DeserializeOwned;

use rivw_core::Error;

pub struct Overlay {
    table: toml::Table,
}

impl Overlay {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
        };
        Ok(Self { table })
    }

    pub fn set(&mut self, key: &str, value: Option<impl Into<toml::Value>>) -> &mut Self {
        if let Some(v) = value {
            self.table.insert(key.to_string(), v.into());
        }
        self
    }

    /// TOML integers are signed 64-bit.
    pub fn set_u64(&mut self, key: &str, value: Option<u64>) -> anyhow::Result<&mut Self> {
        if let Some(v) = value {
            let v = i64::try_from(v).map_err(|_| Error::Config(format!("{key} must not exceed {}", i64::MAX)))?;
            self.table.insert(key.to_string(), v.into());
        }
        Ok(self)
    }

    pub fn get(&self, key: &str) -> Option<&toml::Value> {
        self.table.get(key)
    }

    pub fn resolve<T: DeserializeOwned>(self) -> anyhow::Result<T> {
        toml::Value::Table(self.table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()).into())
    }
}
