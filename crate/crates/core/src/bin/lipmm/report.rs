//! Report and table writers. Reports are deterministic: no timestamps, sorted
//! object keys, shortest round-trip float formatting.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub struct Reporter {
    dir: PathBuf,
    command: String,
    config: Value,
    tol: f64,
}

impl Reporter {
    pub fn new(dir: &Path, command: &str, config: Value, tol: f64) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Reporter { dir: dir.to_path_buf(), command: command.to_string(), config, tol })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// `{tool, version, command, config, tolerances, result}` as pretty JSON.
    pub fn report(&self, name: &str, result: impl Serialize) -> Result<()> {
        let doc = json!({
            "tool": "lipmm",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": self.config,
            "tolerances": { "tol": self.tol },
            "result": serde_json::to_value(result)?,
        });
        self.raw_json(name, &doc)
    }

    /// A data file (space, representation) written without the report envelope.
    pub fn raw_json(&self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn table(&self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}
