//! Artifact writing: CSV with a `#` header block, pretty JSON.

use crate::error::CliError;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Shortest round-trip scientific notation, identical across runs.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub struct Csv {
    text: String,
}

impl Csv {
    /// `units` and `notes` become `#` lines; `columns` is the header row.
    pub fn new(command: &str, config_hash: &str, units: &[&str], notes: &[String], columns: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# ness {command}");
        let _ = writeln!(text, "# version: {VERSION}");
        let _ = writeln!(text, "# config_sha256: {config_hash}");
        for u in units {
            let _ = writeln!(text, "# unit: {u}");
        }
        for n in notes {
            let _ = writeln!(text, "# {n}");
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(format!("serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}
