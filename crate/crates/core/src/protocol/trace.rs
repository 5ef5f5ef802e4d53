use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::crypto::NodeId;

/// One line of the newline-delimited JSON event trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub kind: String,
    pub sender: Option<NodeId>,
    pub receiver: Option<NodeId>,
    pub tag: Option<String>,
    pub outcome: String,
}

pub fn write_ndjson<W: Write>(mut out: W, records: &[TraceRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_ndjson(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}
