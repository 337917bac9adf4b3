//! JSON Lines record formats.
//!
//! Input, one record per line:
//! `{"id": "...", "tokens": [{"t": "...", "w": 0, "pos": "NOUN"}, ...]}`
//! where `w` is the 0-based word index and `pos` a tag accepted by
//! [`POSCategory::parse`]; unknown tags map to `OTHER` and are counted.
//!
//! Output, one record per line:
//! `{"id": "...", "corrupted": [...], "labels": [...|null], "mask": [0|1]}`.
//! The mask is included so downstream checks need not re-derive it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corruption::CorruptedRecord;
use crate::types::{CoreError, Mask, POSCategory, Token, TokenSequence};

#[derive(Debug, Error, PartialEq)]
pub enum RecordError {
    #[error("malformed JSON record: {0}")]
    Json(String),
    #[error(transparent)]
    Sequence(#[from] CoreError),
}

#[derive(Debug, Serialize, Deserialize)]
struct RawToken {
    t: String,
    w: u32,
    pos: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    id: String,
    tokens: Vec<RawToken>,
}

/// A parsed input record and how many of its POS tags were unrecognized.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRecord {
    pub seq: TokenSequence,
    pub unknown_pos: u64,
}

/// Parse one input line into a validated [`TokenSequence`].
pub fn parse_record(line: &str) -> Result<ParsedRecord, RecordError> {
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|e| RecordError::Json(e.to_string()))?;
    let mut unknown_pos = 0u64;
    let tokens = raw
        .tokens
        .into_iter()
        .map(|t| {
            let pos = POSCategory::parse(&t.pos).unwrap_or_else(|| {
                unknown_pos += 1;
                POSCategory::Other
            });
            Token::new(t.t, t.w, pos)
        })
        .collect();
    let seq = TokenSequence::new(raw.id, tokens)?;
    Ok(ParsedRecord { seq, unknown_pos })
}

/// One output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub id: String,
    pub corrupted: Vec<String>,
    pub labels: Vec<Option<String>>,
    pub mask: Vec<u8>,
}

impl OutputRecord {
    pub fn new(record: CorruptedRecord, mask: &Mask) -> OutputRecord {
        OutputRecord {
            id: record.id,
            corrupted: record.corrupted_tokens,
            labels: record.labels,
            mask: mask.bits().iter().map(|&b| u8::from(b)).collect(),
        }
    }

    /// Serialize as one JSON line (no trailing newline).
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("output record serialization cannot fail")
    }

    pub fn parse(line: &str) -> Result<OutputRecord, RecordError> {
        serde_json::from_str(line).map_err(|e| RecordError::Json(e.to_string()))
    }
}
