//! Run manifests: line-delimited JSON, a header line followed by one line
//! per frame. Keys are written in sorted order.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::{CliError, CliResult};

pub const SCHEMA: &str = "fgbd-manifest";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Default)]
pub struct Manifest {
    lines: Vec<Value>,
}

impl Manifest {
    pub fn new(command: &str, config: Value) -> Self {
        let header = json!({
            "schema": SCHEMA,
            "version": SCHEMA_VERSION,
            "command": command,
            "config": config,
        });
        Manifest { lines: vec![header] }
    }

    pub fn push(&mut self, record: impl Serialize) -> CliResult<()> {
        let v = serde_json::to_value(record).map_err(|e| CliError::Output(format!("manifest: {e}")))?;
        self.lines.push(v);
        Ok(())
    }

    pub fn records(&self) -> &[Value] {
        &self.lines[1..]
    }

    pub fn to_string_lines(&self) -> String {
        self.lines.iter().map(|l| format!("{l}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut f = std::fs::File::create(path).map_err(|e| CliError::output(path, e))?;
        f.write_all(self.to_string_lines().as_bytes()).map_err(|e| CliError::output(path, e))
    }
}

/// Parses a manifest back into its lines.
pub fn read(path: &Path) -> CliResult<Vec<Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| CliError::input(path, e)))
        .collect()
}
