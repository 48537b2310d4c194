//! Run records: what ran, with which config, producing which files.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{append_jsonl, unix_millis, RunDir};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Files and wall-clock time of one task.
#[derive(Clone, Debug, Serialize)]
pub struct TaskOutput {
    pub task: String,
    pub files: Vec<PathBuf>,
    pub millis: u128,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub config_hash: String,
    pub artifact_version: &'static str,
    pub config: BTreeMap<String, String>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub data_dir: PathBuf,
    pub status: &'static str,
    pub tasks: Vec<TaskOutput>,
}

impl RunRecord {
    pub fn new(command: &str, cfg: &RunConfig, dir: &RunDir) -> Self {
        Self {
            command: command.to_string(),
            config_hash: cfg.hash(command),
            artifact_version: ARTIFACT_VERSION,
            config: cfg.entries().clone(),
            started_unix_ms: dir.started_ms,
            finished_unix_ms: 0,
            data_dir: dir.data_dir.clone(),
            status: "running",
            tasks: Vec::new(),
        }
    }

    /// Appends to `<config dir>/records.jsonl` and writes `record.json` into
    /// the data directory.
    pub fn commit(mut self, dir: &RunDir, status: &'static str) -> Result<Self, CliError> {
        self.status = status;
        self.finished_unix_ms = unix_millis();
        crate::output::write_json(&dir.file("record.json"), &self)?;
        append_jsonl(&dir.config_dir.join("records.jsonl"), &self)?;
        Ok(self)
    }
}
