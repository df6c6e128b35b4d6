//! Run manifests: resolved configuration plus provenance, as `key=value`.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "manifest.txt";

pub fn sha256_file(path: &Path) -> Result<String> {
    let data = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&data)))
}

#[derive(Debug, Default, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("tool_version", env!("CARGO_PKG_VERSION"));
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Records a file path and its SHA-256.
    pub fn push_input(&mut self, key: &str, path: &Path) -> Result<()> {
        self.push(key, path.display());
        self.push(&format!("{key}_sha256"), sha256_file(path)?);
        Ok(())
    }

    /// Appends `key=value` lines produced elsewhere.
    pub fn push_text(&mut self, text: &str) {
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                self.push(k, v);
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn parse(text: &str) -> Self {
        let mut m = Self::default();
        m.push_text(text);
        m
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).with_context(|| format!("cannot write {}", path.display()))
    }
}
