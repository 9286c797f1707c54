use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct MapRecord {
    pub source: String,
    pub sha256: String,
    pub states: usize,
}

/// Everything needed to rerun a command and get the same CSV/JSON outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: &'static str,
    pub maps: Vec<MapRecord>,
    pub parameters: Value,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub notes: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

impl Manifest {
    pub fn new(command: &str, parameters: Value) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            maps: vec![],
            parameters,
            seeds: vec![],
            outputs: vec![],
            notes: vec![],
            started_unix: now(),
            finished_unix: 0,
        }
    }

    pub fn finish(mut self) -> String {
        self.finished_unix = now();
        self.outputs.sort();
        serde_json::to_string_pretty(&self).expect("manifest serializes")
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}
