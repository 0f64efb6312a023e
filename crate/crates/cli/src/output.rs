use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Provenance record written next to every set of outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<OutputFile>,
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Collects written files and emits the manifest.
pub struct Artifacts {
    manifest: RunManifest,
}

impl Artifacts {
    pub fn new(subcommand: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        Self {
            manifest: RunManifest {
                subcommand: subcommand.to_owned(),
                tool_version: env!("CARGO_PKG_VERSION").to_owned(),
                seed,
                config,
                started: now(),
                finished: 0.0,
                outputs: Vec::new(),
            },
        }
    }

    pub fn write(&mut self, path: &Path, contents: &[u8]) -> Result<(), Failure> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        }
        std::fs::write(path, contents).map_err(|e| io_failure(path, e))?;
        self.manifest.outputs.push(OutputFile {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(contents)),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<(), Failure> {
        let mut text = to_json(value)?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    pub fn finish(mut self, manifest_path: &Path) -> Result<(), Failure> {
        self.manifest.finished = now();
        let mut text = to_json(&self.manifest)?;
        text.push('\n');
        std::fs::write(manifest_path, text).map_err(|e| io_failure(manifest_path, e))
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Invalid(format!("serializing output: {e}")))
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Invalid(format!("{}: {e}", path.display()))
}

/// `<file>.manifest.json` next to a single output file.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Inclusive `start:step:end` grid; the end point is kept when it lies
/// within half a step of the last grid point. A bare number is a one-point grid.
pub fn parse_range(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("`{s}` is not a number in range `{text}`"))
    };
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [a, s, b] => {
            let (start, step, end) = (num(a)?, num(s)?, num(b)?);
            if !(step > 0.0) || !start.is_finite() || !end.is_finite() || end < start {
                return Err(format!("range `{text}` needs step > 0 and start <= end"));
            }
            let count = ((end - start) / step + 0.5).floor() as usize;
            if count > 10_000_000 {
                return Err(format!("range `{text}` has too many points"));
            }
            Ok((0..=count).map(|m| start + m as f64 * step).collect())
        }
        _ => Err(format!("`{text}` is neither a number nor start:step:end")),
    }
}
