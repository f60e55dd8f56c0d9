//! Atomic artifact writes and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let tmp = dir.join(format!(".{name}.tmp"));
    let target = dir.join(name);
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, &target).with_context(|| format!("renaming to {}", target.display()))?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Entry {
    file: String,
    bytes: usize,
    sha256: String,
}

pub struct Output {
    dir: PathBuf,
    artifacts: Vec<Entry>,
    inputs: Vec<Entry>,
}

impl Output {
    pub fn new(dir: PathBuf) -> Self {
        Self { dir, artifacts: vec![], inputs: vec![] }
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        let bytes = contents.as_ref();
        write_atomic(&self.dir, name, bytes)?;
        self.artifacts.push(Entry { file: name.to_string(), bytes: bytes.len(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }

    /// Records an input file (by the name it was given on the command line) and its checksum.
    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(Entry { file: path.display().to_string(), bytes: bytes.len(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    /// Writes `manifest.json` listing the configuration, versions and every artifact.
    pub fn finish(self, command: &str, config: Value, status: &str) -> Result<()> {
        let manifest = json!({
            "command": command,
            "config": config,
            "versions": {
                "mongeo": mongeo::VERSION,
                "mongeo-cli": env!("CARGO_PKG_VERSION"),
            },
            "inputs": self.inputs,
            "artifacts": self.artifacts,
            "status": status,
        });
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        write_atomic(&self.dir, "manifest.json", text.as_bytes())
    }
}

/// Trace CSV: a header naming the columns, then one row per sample.
pub fn trace_csv(columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = format!("# mongeo v1 trace, columns={}\n", columns.join(","));
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
