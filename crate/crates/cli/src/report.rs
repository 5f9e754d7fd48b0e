//! JSON report documents.
//!
//! Every document has the same envelope:
//!
//! ```json
//! { "schema": "floss.<command>/v1",
//!   "tool": { "name": "floss", "version": "0.1.0" },
//!   "config": { ... fully resolved settings ... },
//!   "inputs": [ { "path": "...", "sha256": "...", ... } ],
//!   "results": { ... } }
//! ```
//!
//! The JSON Schemas under `schemas/` describe each document and are frozen
//! per `v` number. Non-finite numbers (an infinite PSNR) are written as the
//! strings `"inf"`, `"-inf"` or `"nan"`.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const TOOL_NAME: &str = "floss";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: TOOL_NAME,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Document<C: Serialize, R: Serialize> {
    pub schema: String,
    pub tool: ToolInfo,
    pub config: C,
    pub inputs: Vec<InputDigest>,
    pub results: R,
}

impl<C: Serialize, R: Serialize> Document<C, R> {
    pub fn new(command: &str, config: C, inputs: Vec<InputDigest>, results: R) -> Self {
        Self {
            schema: format!("{TOOL_NAME}.{command}/v{SCHEMA_VERSION}"),
            tool: ToolInfo::current(),
            config,
            inputs,
            results,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report structs serialize");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of an in-memory float buffer (little-endian bytes).
pub fn sha256_f64(values: impl IntoIterator<Item = f64>) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

/// PSNR formatted for text output.
pub fn fmt_db(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else {
        format!("{v:.4}")
    }
}
