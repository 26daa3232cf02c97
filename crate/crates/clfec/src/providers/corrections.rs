//! Parsing of model output payloads: fenced-JSON extraction with a
//! balanced-object fallback, and the `corrections` / `queries` schemas.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A model-proposed correction: replace the verbatim source fragment
/// `original` with `corrected`. A no-op (`original == corrected`) is valid at
/// parse time and filtered downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub original: String,
    pub corrected: String,
    #[serde(default)]
    pub reason: String,
}

impl Correction {
    pub fn new(original: impl Into<String>, corrected: impl Into<String>) -> Self {
        Correction { original: original.into(), corrected: corrected.into(), reason: String::new() }
    }

    pub fn with_reason(mut self, reason: impl Into<String>) -> Self {
        self.reason = reason.into();
        self
    }

    pub fn is_noop(&self) -> bool {
        self.original == self.corrected
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no parsable JSON payload in model output")]
    NoParsablePayload,
    #[error("payload does not match the expected schema: {0}")]
    SchemaMismatch(String),
}

/// Extracts the first fenced ```json block; if none parses, falls back to the
/// first balanced top-level JSON object in the text.
pub fn extract_json_payload(raw: &str) -> Option<serde_json::Value> {
    if let Some(inner) = first_fenced_json(raw) {
        if let Ok(v) = serde_json::from_str(inner.trim()) {
            return Some(v);
        }
    }
    first_balanced_object(raw)
}

fn first_fenced_json(raw: &str) -> Option<&str> {
    let open = raw.find("```json")?;
    let body = &raw[open + "```json".len()..];
    let close = body.find("```")?;
    Some(&body[..close])
}

fn first_balanced_object(raw: &str) -> Option<serde_json::Value> {
    let bytes = raw.as_bytes();
    let mut search_from = 0usize;
    while let Some(rel) = raw[search_from..].find('{') {
        let start = search_from + rel;
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        let mut end = None;
        for (i, &b) in bytes.iter().enumerate().skip(start) {
            if in_string {
                if escaped {
                    escaped = false;
                } else if b == b'\\' {
                    escaped = true;
                } else if b == b'"' {
                    in_string = false;
                }
                continue;
            }
            match b {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(i);
                        break;
                    }
                }
                _ => {}
            }
        }
        if let Some(end) = end {
            if let Ok(v) = serde_json::from_str(&raw[start..=end]) {
                return Some(v);
            }
        }
        search_from = start + 1;
    }
    None
}

/// Parses the `corrections` list out of a raw model reply. An empty list is a
/// valid success.
pub fn parse_corrections(raw: &str) -> Result<Vec<Correction>, ParseError> {
    let payload = extract_json_payload(raw).ok_or(ParseError::NoParsablePayload)?;
    let list = payload
        .get("corrections")
        .ok_or_else(|| ParseError::SchemaMismatch("missing \"corrections\" key".into()))?
        .as_array()
        .ok_or_else(|| ParseError::SchemaMismatch("\"corrections\" is not an array".into()))?;
    let mut corrections = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        let original = item.get("original").and_then(|v| v.as_str());
        let corrected = item.get("corrected").and_then(|v| v.as_str());
        match (original, corrected) {
            (Some(o), Some(c)) => corrections.push(Correction {
                original: o.to_owned(),
                corrected: c.to_owned(),
                reason: item.get("reason").and_then(|v| v.as_str()).unwrap_or("").to_owned(),
            }),
            _ => {
                return Err(ParseError::SchemaMismatch(format!(
                    "corrections[{i}] is missing original/corrected"
                )))
            }
        }
    }
    Ok(corrections)
}

/// Parses the `queries` list out of a raw model reply.
pub fn parse_queries(raw: &str) -> Result<Vec<String>, ParseError> {
    let payload = extract_json_payload(raw).ok_or(ParseError::NoParsablePayload)?;
    let list = payload
        .get("queries")
        .ok_or_else(|| ParseError::SchemaMismatch("missing \"queries\" key".into()))?
        .as_array()
        .ok_or_else(|| ParseError::SchemaMismatch("\"queries\" is not an array".into()))?;
    list.iter()
        .enumerate()
        .map(|(i, v)| {
            v.as_str()
                .map(str::to_owned)
                .ok_or_else(|| ParseError::SchemaMismatch(format!("queries[{i}] is not a string")))
        })
        .collect()
}
