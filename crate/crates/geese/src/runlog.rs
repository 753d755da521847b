//! Append-only run log: one JSON record per line in `runs.ndjson`.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const LOG_FILE: &str = "runs.ndjson";
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Plan,
    SimulateCollab,
    SimulateDelivery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: u64,
    pub timestamp: String,
    pub kind: RunKind,
    pub input_digest: String,
    pub inputs: Value,
    pub outcome: Value,
    #[serde(default)]
    pub sim_reports: Vec<Value>,
    pub toolkit_version: String,
}

/// SHA-256 of the compact serialization of `inputs`. Object keys serialize
/// in sorted order, so the digest does not depend on how the inputs were
/// written.
pub fn input_digest(inputs: &Value) -> String {
    hex::encode(Sha256::digest(inputs.to_string().as_bytes()))
}

struct State {
    file: File,
    records: Vec<RunRecord>,
}

pub struct RunLog {
    path: PathBuf,
    state: Mutex<State>,
}

impl RunLog {
    /// Opens (creating if needed) the log in `dir`, loading earlier records.
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let mut records = Vec::new();
        if path.exists() {
            for (n, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: RunRecord = serde_json::from_str(&line).map_err(|e| {
                    std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("{}:{}: {e}", path.display(), n + 1),
                    )
                })?;
                records.push(rec);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path,
            state: Mutex::new(State { file, records }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends a record and returns it. Appends are serialized.
    pub fn append(
        &self,
        kind: RunKind,
        inputs: Value,
        outcome: Value,
        sim_reports: Vec<Value>,
    ) -> std::io::Result<RunRecord> {
        let mut st = self.state.lock().expect("run log lock");
        let run_id = st.records.last().map_or(1, |r| r.run_id + 1);
        let rec = RunRecord {
            run_id,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            kind,
            input_digest: input_digest(&inputs),
            inputs,
            outcome,
            sim_reports,
            toolkit_version: TOOLKIT_VERSION.to_string(),
        };
        let mut line = serde_json::to_string(&rec).expect("record serializes");
        line.push('\n');
        st.file.write_all(line.as_bytes())?;
        st.file.flush()?;
        st.records.push(rec.clone());
        Ok(rec)
    }

    pub fn get(&self, run_id: u64) -> Option<RunRecord> {
        let st = self.state.lock().expect("run log lock");
        st.records.iter().find(|r| r.run_id == run_id).cloned()
    }

    pub fn list(&self) -> Vec<RunRecord> {
        self.state.lock().expect("run log lock").records.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"b": 1, "a": [1.5, {"y": 2, "x": 3}]}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a": [1.5, {"x": 3, "y": 2}], "b": 1}"#).unwrap();
        assert_eq!(input_digest(&a), input_digest(&b));
        assert_eq!(input_digest(&a).len(), 64);
    }

    #[test]
    fn ids_are_monotonic_across_reopen() {
        let d = tempfile::tempdir().unwrap();
        let log = RunLog::open(d.path()).unwrap();
        let r1 = log.append(RunKind::Plan, json!({"w": 1}), json!(null), vec![]).unwrap();
        let r2 = log.append(RunKind::Plan, json!({"w": 2}), json!(null), vec![]).unwrap();
        assert_eq!((r1.run_id, r2.run_id), (1, 2));
        drop(log);
        let log = RunLog::open(d.path()).unwrap();
        assert_eq!(log.list().len(), 2);
        let r3 = log.append(RunKind::SimulateCollab, json!({}), json!(null), vec![]).unwrap();
        assert_eq!(r3.run_id, 3);
        let stored = log.get(1).unwrap();
        assert_eq!(input_digest(&stored.inputs), stored.input_digest);
    }

    #[test]
    fn corrupt_log_is_reported() {
        let d = tempfile::tempdir().unwrap();
        std::fs::write(d.path().join(LOG_FILE), "{not json\n").unwrap();
        let err = RunLog::open(d.path()).err().unwrap();
        assert!(err.to_string().contains(":1:"));
    }
}
