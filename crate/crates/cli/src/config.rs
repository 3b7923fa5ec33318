//! Merging command-line flags over a TOML configuration file.

use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, FromArgMatches};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::CliError;

/// Configuration file contents: top-level keys apply to every command,
/// tables named after a command apply to that command only.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    pub table: toml::Table,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let table = text
            .parse::<toml::Table>()
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))?;
        Ok(ConfigFile { table })
    }

    pub fn section(&self, name: &str) -> Result<toml::Table, CliError> {
        match self.table.get(name) {
            None => Ok(toml::Table::new()),
            Some(toml::Value::Table(t)) => Ok(t.clone()),
            Some(_) => Err(CliError::Usage(format!("config key '{name}' must be a table"))),
        }
    }

    /// Top-level scalar keys.
    pub fn globals(&self) -> toml::Table {
        self.table
            .iter()
            .filter(|(_, v)| !v.is_table())
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }
}

/// Parses `T` from `matches`, then lets every key of `file` replace the
/// value of an argument not given on the command line. Returns the merged
/// value and its table form.
pub fn resolve<T>(matches: &ArgMatches, file: &toml::Table) -> Result<(T, toml::Table), CliError>
where
    T: FromArgMatches + Serialize + DeserializeOwned,
{
    let parsed = T::from_arg_matches(matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut table = toml::Table::try_from(&parsed)
        .map_err(|e| CliError::Usage(format!("cannot record configuration: {e}")))?;
    for (k, v) in file {
        if !matches.ids().any(|id| id.as_str() == k) {
            return Err(CliError::Usage(format!("unknown config key '{k}'")));
        }
        if matches.value_source(k) != Some(ValueSource::CommandLine) {
            table.insert(k.clone(), v.clone());
        }
    }
    let merged: T = toml::Value::Table(table.clone())
        .try_into()
        .map_err(|e| CliError::Usage(format!("invalid configuration value: {e}")))?;
    let table = toml::Table::try_from(&merged)
        .map_err(|e| CliError::Usage(format!("cannot record configuration: {e}")))?;
    Ok((merged, table))
}
