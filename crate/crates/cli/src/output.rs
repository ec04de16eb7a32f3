use std::io::Write;
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, Result};
use crate::spec::SpaceSpec;

/// Common header of every JSON report.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub spec_sha256: Option<String>,
    pub seed: Option<u64>,
    pub resolution: Option<f64>,
    pub passed: bool,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(command: &str, spec: Option<&SpaceSpec>, result: T) -> Self {
        Report {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            spec_sha256: spec.map(|s| s.sha256.clone()),
            seed: None,
            resolution: None,
            passed: true,
            result,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn resolution(mut self, r: f64) -> Self {
        self.resolution = Some(r);
        self
    }

    pub fn passed(mut self, p: bool) -> Self {
        self.passed = p;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| CliError::Usage(format!("serializing report: {e}")))?;
        s.push('\n');
        Ok(s)
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |source| CliError::Io { path: path.to_owned(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Sends the report to `out` or stdout.
pub fn emit(out: Option<&Path>, json: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, json),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(json.as_bytes()).and_then(|_| so.flush()).map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })
        }
    }
}
