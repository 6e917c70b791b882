//! Output writing: RFC-4180 CSV with round-trip-exact doubles, JSON
//! reports, and the run manifest with checksums.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

/// 17 significant digits: round-trip exact for `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// RFC-4180 CSV: CRLF line endings, '.' decimal separator, header row.
pub struct CsvWriter {
    path: PathBuf,
    buf: String,
    columns: usize,
}

impl CsvWriter {
    pub fn new(dir: &Path, name: &str, header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push_str("\r\n");
        Self {
            path: dir.join(name),
            buf,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.columns, "CSV row width mismatch");
        self.buf.push_str(&fields.join(","));
        self.buf.push_str("\r\n");
    }

    pub fn row_f64(&mut self, fields: &[f64]) {
        let formatted: Vec<String> = fields.iter().map(|v| fmt_f64(*v)).collect();
        self.row(&formatted);
    }

    /// Write the file and return `(file name, sha256)`.
    pub fn finish(self) -> Result<(String, String), CliError> {
        std::fs::write(&self.path, self.buf.as_bytes())?;
        let digest = hex_digest(self.buf.as_bytes());
        Ok((
            self.path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            digest,
        ))
    }
}

pub fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    value: &T,
) -> Result<(String, String), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical { stage: "serialize", message: e.to_string() })?;
    text.push('\n');
    std::fs::write(dir.join(name), text.as_bytes())?;
    Ok((name.to_string(), hex_digest(text.as_bytes())))
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Manifest of a run: config echo, code version, per-stage wall times and
/// output checksums. Written as `manifest.json` when the run starts and
/// finalized when it ends.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub version: String,
    pub status: String,
    pub config: ExperimentConfig,
    pub stages: Vec<StageRecord>,
    pub outputs: Vec<OutputRecord>,
    pub assertion_failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn begin(scenario: &str, config: &ExperimentConfig, dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        let manifest = RunManifest {
            scenario: scenario.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            status: "running".to_string(),
            config: config.clone(),
            stages: Vec::new(),
            outputs: Vec::new(),
            assertion_failures: Vec::new(),
        };
        manifest.write(dir)?;
        Ok(manifest)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Numerical { stage: "manifest", message: e.to_string() })?;
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }

    pub fn record_output(&mut self, file: String, sha256: String) {
        self.outputs.push(OutputRecord { file, sha256 });
    }

    pub fn finalize(&mut self, dir: &Path, failures: Vec<String>) -> Result<(), CliError> {
        self.assertion_failures = failures;
        self.status = if self.assertion_failures.is_empty() {
            "ok".to_string()
        } else {
            "assertions-failed".to_string()
        };
        self.write(dir)
    }
}

/// Times stages and records them into the manifest.
pub struct StageTimer {
    start: Instant,
}

impl StageTimer {
    pub fn start() -> Self {
        Self {
            start: Instant::now(),
        }
    }

    pub fn record(self, manifest: &mut RunManifest, name: &str) {
        manifest.stages.push(StageRecord {
            name: name.to_string(),
            wall_seconds: self.start.elapsed().as_secs_f64(),
        });
    }
}
