//! The JSON document every experiment produces, and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, Result};

/// Bumped whenever a payload changes shape.
pub const SCHEMA_VERSION: u32 = 1;

/// A tolerance check with its numeric margin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `observed ≤ tolerance`.
    pub fn at_most(name: impl Into<String>, observed: f64, tolerance: f64) -> Self {
        Check { name: name.into(), observed, tolerance, pass: observed <= tolerance }
    }

    /// Passes when `observed ≥ tolerance`.
    pub fn at_least(name: impl Into<String>, observed: f64, tolerance: f64) -> Self {
        Check { name: name.into(), observed, tolerance, pass: observed >= tolerance }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultEnvelope {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub experiment: String,
    /// Effective configuration, defaults included.
    pub config: serde_json::Value,
    /// The only field that differs between identical runs.
    pub wall_clock_seconds: f64,
    /// `None` when the experiment has no tolerance to meet.
    pub pass: Option<bool>,
    pub checks: Vec<Check>,
    pub payload: serde_json::Value,
}

impl ResultEnvelope {
    pub fn new(experiment: &str, config: serde_json::Value, checks: Vec<Check>, payload: serde_json::Value) -> Self {
        let pass = (!checks.is_empty()).then(|| checks.iter().all(|c| c.pass));
        ResultEnvelope {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            experiment: experiment.to_string(),
            config,
            wall_clock_seconds: 0.0,
            pass,
            checks,
            payload,
        }
    }

    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
