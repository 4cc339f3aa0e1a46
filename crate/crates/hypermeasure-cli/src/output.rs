//! JSON envelopes and CSV tables.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::error::{CliError, Result};
use crate::SCHEMA_VERSION;

/// One CSV cell.
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// 17 significant digits, `.` as decimal separator.
pub fn real(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub struct Outputs {
    pub dir: PathBuf,
    pub written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Outputs { dir, written: Vec::new() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// `{schema_version, command, config, result}`.
    pub fn report(&mut self, name: &str, command: &str, config: &impl Serialize, result: &impl Serialize) -> Result<()> {
        let doc = json!({
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": config,
            "result": result,
        });
        self.json(name, &doc)
    }

    /// Bare artifact with a `schema_version` field next to its own.
    pub fn artifact(&mut self, name: &str, kind: &str, value: &impl Serialize) -> Result<()> {
        let doc = json!({ "schema_version": SCHEMA_VERSION, "kind": kind, "data": value });
        self.json(name, &doc)
    }

    fn json(&mut self, name: &str, doc: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<Cell>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Numerical(e.to_string());
        w.write_record(header).map_err(io)?;
        for row in rows {
            let cells: Vec<String> = row
                .into_iter()
                .map(|c| match c {
                    Cell::Int(v) => v.to_string(),
                    Cell::Real(v) => real(v),
                    Cell::Text(s) => s,
                })
                .collect();
            w.write_record(&cells).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Numerical(e.to_string()))?;
        self.write(name, &bytes)
    }
}

/// Reads an artifact written by [`Outputs::artifact`].
pub fn read_artifact<T: serde::de::DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if doc.get("schema_version").and_then(|v| v.as_u64()) != Some(SCHEMA_VERSION as u64) {
        return Err(CliError::Config(format!("{}: unsupported schema_version", path.display())));
    }
    if doc.get("kind").and_then(|v| v.as_str()) != Some(kind) {
        return Err(CliError::Config(format!("{}: not a {kind} artifact", path.display())));
    }
    serde_json::from_value(doc["data"].clone()).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}
