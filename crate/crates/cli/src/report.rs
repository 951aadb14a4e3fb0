//! Run reports: effective config, per-stage timings, checksummed output
//! manifest, and warnings, written as `report.json` next to the artifacts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

#[derive(Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Serialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, serde_json::Value>,
    pub timings: Vec<StageTiming>,
    pub outputs: Vec<OutputFile>,
    pub warnings: Vec<String>,
    /// Command-specific scalars (eigenvalues, indices, accuracies).
    pub summary: serde_json::Value,
}

/// Collects everything a command produces; `finish` writes `report.json`.
pub struct Reporter {
    output_dir: PathBuf,
    command: String,
    started: Instant,
    timings: Vec<StageTiming>,
    outputs: Vec<OutputFile>,
    warnings: Vec<String>,
}

impl Reporter {
    pub fn new(output_dir: &Path, command: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(output_dir).map_err(|e| {
            CliError::Config(format!(
                "cannot create output directory {}: {e}",
                output_dir.display()
            ))
        })?;
        Ok(Self {
            output_dir: output_dir.to_path_buf(),
            command: command.to_string(),
            started: Instant::now(),
            timings: Vec::new(),
            outputs: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn output_dir(&self) -> &Path {
        &self.output_dir
    }

    /// Marks the end of a stage; stages are contiguous from the previous
    /// mark (or construction), so the timings account for the whole run.
    pub fn mark(&mut self, stage: &str) {
        let now = Instant::now();
        let millis = now.duration_since(self.started).as_secs_f64() * 1e3;
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            millis,
        });
        self.started = now;
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{message}");
        self.warnings.push(message);
    }

    /// Writes one artifact atomically (temp file + rename) and records its
    /// checksum in the manifest.
    pub fn write_output(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.output_dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Data(format!("cannot create {}: {e}", parent.display())))?;
        }
        write_atomic(&path, contents)?;
        let digest = Sha256::digest(contents);
        self.outputs.push(OutputFile {
            path: name.to_string(),
            sha256: format!("{digest:x}"),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    /// Writes `report.json` and returns the finished report.
    pub fn finish(
        mut self,
        config: BTreeMap<String, serde_json::Value>,
        summary: serde_json::Value,
    ) -> Result<RunReport, CliError> {
        self.mark("finalize");
        let report = RunReport {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            config,
            timings: self.timings,
            outputs: self.outputs,
            warnings: self.warnings,
            summary,
        };
        let text = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Data(format!("cannot serialize report: {e}")))?;
        write_atomic(&self.output_dir.join("report.json"), text.as_bytes())?;
        Ok(report)
    }
}

/// Write-to-temp then rename, so a failed run never leaves partial files.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = parent.join(format!(".{name}.tmp"));
    let fail = |e: std::io::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    std::fs::write(&tmp, contents).map_err(fail)?;
    std::fs::rename(&tmp, path).map_err(fail)
}

/// Floats formatted with 17 significant digits survive a read round trip.
pub fn csv_cell(value: f64) -> String {
    format!("{value:.16e}")
}
