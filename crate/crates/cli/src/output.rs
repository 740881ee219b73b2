//! Output directory bookkeeping: every file starts with the resolved
//! configuration and is listed in `manifest.json` with its SHA-256.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub item: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    pub config: String,
    pub wall_clock_seconds: f64,
    pub status: String,
    pub failures: Vec<Failure>,
    pub files: Vec<FileEntry>,
}

pub struct OutputDir {
    dir: PathBuf,
    echo: String,
    files: Vec<FileEntry>,
    pub failures: Vec<Failure>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl OutputDir {
    pub fn create(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let dir = PathBuf::from(&cfg.run.out);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(OutputDir { dir, echo: cfg.echo_text(), files: Vec::new(), failures: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn fail(&mut self, item: impl Into<String>, error: impl std::fmt::Display) {
        self.failures.push(Failure { item: item.into(), error: error.to_string() });
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, &bytes).map_err(|e| io_err(&path, e))?;
        let digest = Sha256::digest(&bytes);
        let sha256 = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry { name: name.to_string(), bytes: bytes.len() as u64, sha256 });
        Ok(())
    }

    /// CSV with the configuration as leading `#` lines.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut out: Vec<u8> = self.echo.lines().flat_map(|l| format!("# {l}\n").into_bytes()).collect();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
            for r in rows {
                w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        self.put(name, out)
    }

    /// JSON object with the configuration under `"config"`.
    pub fn json(&mut self, name: &str, value: serde_json::Value) -> Result<(), CliError> {
        let mut obj = serde_json::Map::new();
        obj.insert("config".into(), serde_json::Value::String(self.echo.clone()));
        match value {
            serde_json::Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(obj)).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.put(name, text.into_bytes())
    }

    /// SVG document; the configuration goes into a leading comment.
    pub fn svg(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let echo = self.echo.replace("--", "- -");
        let text = body.replacen("<svg ", &format!("<!--\n{echo}-->\n<svg "), 1);
        self.put(name, text.into_bytes())
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(self, cfg: &ExperimentConfig, started: Instant) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            experiment: cfg.experiment.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: cfg.run.seed,
            threads: cfg.run.threads,
            config: self.echo.clone(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
            status: if self.failures.is_empty() { "ok".into() } else { "partial".into() },
            failures: self.failures,
            files: self.files,
        };
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(manifest)
    }
}

/// Shortest round-trip decimal form, so identical values print identically.
/// Very small or large magnitudes switch to exponent notation.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.0, 1.5, -2.25e-12, 1e-10, 123456.789, 3.0e20, 0.1 + 0.2] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1e-10), "1e-10");
        assert_eq!(num(0.5), "0.5");
    }
}
