//! Config files mirroring the command-line flags.
//!
//! A file is TOML or JSON. Keys are the long flag names. Keys for one
//! command can live in a section named after it (`[mu-bar]`); when that
//! section exists, only it is read, otherwise the top-level keys are. A
//! document with a top-level `config` table (the `--json` output of every
//! command) is read from that table, so outputs load back as configs.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::{Table, Value};

pub const COMMANDS: [&str; 5] = ["solo", "correctness-map", "mu-bar", "biased", "simulate"];

/// Parses `text` as JSON when it starts with `{`, otherwise as TOML.
pub fn parse(text: &str) -> Result<Table> {
    if text.trim_start().starts_with('{') {
        let json: serde_json::Value = serde_json::from_str(text).context("parsing JSON config")?;
        let value = Value::try_from(json).context("converting JSON config")?;
        match value {
            Value::Table(t) => Ok(t),
            _ => Err(anyhow!("config must be an object")),
        }
    } else {
        text.parse::<Table>().context("parsing TOML config")
    }
}

/// Picks the keys that apply to `command`.
pub fn section(mut doc: Table, command: &str) -> Table {
    if let Some(Value::Table(t)) = doc.remove("config") {
        return t;
    }
    if let Some(Value::Table(t)) = doc.remove(command) {
        return t;
    }
    for c in COMMANDS {
        doc.remove(c);
    }
    doc
}

pub fn load(path: &Path, command: &str) -> Result<Table> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let doc = parse(&text).map_err(|e| invalid(format!("{}: {e:#}", path.display())))?;
    Ok(section(doc, command))
}

/// Overlays the flags given on the command line onto the file's keys. Unset
/// flags must serialize to nothing.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, file: Option<Table>) -> Result<T> {
    let Some(mut table) = file else {
        return Ok(toml::Value::try_from(flags)?.try_into()?);
    };
    let Value::Table(given) = Value::try_from(flags)? else {
        unreachable!("flag structs serialize to tables");
    };
    table.extend(given);
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| invalid(format!("config: {}", e.message())))
}

/// Error for malformed input, reported with exit code 2.
#[derive(Debug)]
pub struct InvalidInput(pub String);

impl std::fmt::Display for InvalidInput {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidInput {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InvalidInput(msg.into()))
}
