use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{hex, ExperimentConfig};

/// Name of the per-run index; it lists every other file of the run.
pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment_id: String,
    pub timestamp: String,
    pub config_hash: String,
    /// path relative to the run directory
    pub payload: String,
    /// sha256 over "blob <len>\0" followed by the file bytes
    pub digest: String,
    pub bytes: u64,
}

pub fn content_digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex(&h.finalize())
}

/// Output directory of one run plus its record index.
pub struct RunDir {
    pub experiment_id: String,
    pub config_hash: String,
    pub dir: PathBuf,
    records: BufWriter<File>,
}

impl RunDir {
    pub fn create(subcommand: &str, cfg: &ExperimentConfig) -> Result<Self> {
        let config_hash = cfg.hash();
        let experiment_id = format!("{subcommand}-{}", &config_hash[..12]);
        let dir = cfg.out_dir.join(&experiment_id);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let records = BufWriter::new(File::create(dir.join(RECORDS_FILE))?);
        Ok(RunDir { experiment_id, config_hash, dir, records })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Hashes a finished file and appends its record.
    pub fn record(&mut self, name: &str) -> Result<ResultRecord> {
        let bytes = fs::read(self.path(name))?;
        let rec = ResultRecord {
            experiment_id: self.experiment_id.clone(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            config_hash: self.config_hash.clone(),
            payload: name.to_string(),
            digest: content_digest(&bytes),
            bytes: bytes.len() as u64,
        };
        serde_json::to_writer(&mut self.records, &rec)?;
        self.records.write_all(b"\n")?;
        self.records.flush()?;
        Ok(rec)
    }

    pub fn csv(&self, name: &str) -> Result<csv::Writer<File>> {
        Ok(csv::Writer::from_path(self.path(name))?)
    }

    pub fn jsonl(&self, name: &str) -> Result<JsonLines> {
        Ok(JsonLines { out: BufWriter::new(File::create(self.path(name))?) })
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text)?;
        self.record(name)?;
        Ok(())
    }

    /// Flushes a CSV writer and records the file.
    pub fn finish_csv(&mut self, name: &str, mut w: csv::Writer<File>) -> Result<()> {
        w.flush()?;
        drop(w);
        self.record(name)?;
        Ok(())
    }

    pub fn finish_jsonl(&mut self, name: &str, w: JsonLines) -> Result<()> {
        drop(w);
        self.record(name)?;
        Ok(())
    }
}

/// One JSON value per line, flushed after each line so an interrupted run
/// keeps every completed record.
pub struct JsonLines {
    out: BufWriter<File>,
}

impl JsonLines {
    pub fn push<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}
