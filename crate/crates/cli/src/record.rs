use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use synthkit::executor::{Status, SynthesisResult};

pub const SCHEMA: u32 = 1;

/// One line of the records file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema: u32,
    pub task: String,
    pub backend: String,
    pub status: String,
    /// Error text for `SolverError`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub wall_time_s: f64,
    #[serde(default)]
    pub stats: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub timestamp: String,
}

impl RunRecord {
    pub fn new(task: &str, seed: u64, result: &SynthesisResult) -> Self {
        let detail = match result.status() {
            Status::SolverError(e) => Some(e.clone()),
            _ => None,
        };
        RunRecord {
            schema: SCHEMA,
            task: task.to_string(),
            backend: result.backend.clone(),
            status: result.status().name().to_string(),
            detail,
            wall_time_s: result.wall_time.as_secs_f64(),
            stats: serde_json::to_value(&result.stats).expect("stats serialize"),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }

    /// Append as one line with a single write, so concurrent runs sharing a
    /// records file never interleave within a record.
    pub fn append_to(&self, path: &Path) -> Result<()> {
        let mut line = self.to_line();
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("cannot open {}", path.display()))?;
        f.write_all(line.as_bytes()).with_context(|| format!("cannot write {}", path.display()))
    }
}
