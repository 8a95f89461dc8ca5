//! Run manifest embedded in every JSON output.
//!
//! Outputs are byte-identical across runs with equal flags and seed except
//! for the volatile fields `created_at_unix` (here) and `wall_time_secs`
//! (evaluation reports); strip those two keys to get the reproducible
//! hashed region of a file.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// Full resolved configuration of the run.
    pub config: serde_json::Value,
    /// FNV-1a 64 hash of the raw input file bytes.
    pub dataset_fingerprint: String,
    pub master_seed: u64,
    /// Volatile: excluded from the hashed region.
    pub created_at_unix: u64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: serde_json::Value,
        input_bytes: &[u8],
        master_seed: u64,
    ) -> RunManifest {
        RunManifest {
            tool: "treeselect",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            dataset_fingerprint: format!("fnv1a64:{:016x}", fnv1a64(input_bytes)),
            master_seed,
            created_at_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
