use std::fs::OpenOptions;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub hostname: Option<String>,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        let hostname = std::env::var("HOSTNAME")
            .ok()
            .or_else(|| std::fs::read_to_string("/etc/hostname").ok().map(|s| s.trim().to_string()))
            .filter(|s| !s.is_empty());
        Self {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            hostname,
            threads: rayon::current_num_threads(),
        }
    }
}

/// Everything needed to rerun an experiment, plus its results. `config` is
/// fully resolved (architecture sizes filled in, defaults made explicit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u64,
    pub config: ExperimentConfig,
    pub report: MetricsReport,
    /// The baseline evaluated against itself on the same split.
    pub baseline_report: MetricsReport,
    pub baseline_key: String,
    pub started_at: DateTime<Utc>,
    pub environment: Environment,
}

/// Appends one JSON line per record.
pub fn persist_records(records: &[ExperimentRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut out = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn load_records(path: &Path) -> Result<Vec<ExperimentRecord>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)?;
        let found = value.get("schema_version").and_then(|v| v.as_u64());
        match found {
            Some(SCHEMA_VERSION) => out.push(serde_json::from_value(value)?),
            Some(v) => return Err(Error::SchemaVersion { found: v, expected: SCHEMA_VERSION }),
            None => return Err(Error::Config(format!("{}: record without schema_version", path.display()))),
        }
    }
    Ok(out)
}
