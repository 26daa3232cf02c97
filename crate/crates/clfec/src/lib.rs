//! Paragraph-level Chinese proofreading toolkit.
//!
//! The crate covers the full lifecycle of a joint linguistic + factual
//! correction benchmark:
//!
//! - [`edit`] — span-edit algebra over code-point indices: apply an edit set,
//!   extract a minimal edit set from a text pair, validate edit sets.
//! - [`score`] — word-level strict-match evaluation: segmentation, projection
//!   of character edits onto word spans, detection/correction P/R/F1,
//!   per-type recall, edit rates.
//! - [`inject`] — seeded construction of corrupted paragraphs with gold edit
//!   sets from model-generated error maps.
//! - [`providers`] — chat-completion gateway, web-search client with BM25
//!   rerank, and a record/replay cache that makes every run reproducible
//!   offline.
//! - [`pipeline`] — the prompt-only, sequential-RAG and unified-RAG
//!   correction methods.
//! - [`agent`] — a plan-and-execute proofreading agent with todo, search and
//!   verify tools.
//! - [`corpus`] — dataset I/O, statistics, the experiment runner and report
//!   rendering.
//!
//! Start with the `examples/` directory: each example is a runnable tour of
//! one capability and doubles as usage documentation.

pub mod agent;
pub mod corpus;
pub mod edit;
pub mod inject;
pub mod pipeline;
pub mod prompts;
pub mod providers;
pub mod score;

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub use edit::{
    apply_edits, extract_edits, validate_edits, EditOperation, EditSet, ErrorType, Paragraph,
};

/// Diagnostic split a paragraph belongs to.
///
/// `Mix` paragraphs carry both linguistic and factual errors, `Lec` only
/// linguistic ones, `Fec` exactly one factual error, and `ErrorFree`
/// paragraphs are clean controls for measuring over-correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Split {
    #[serde(rename = "MIX")]
    Mix,
    #[serde(rename = "LEC")]
    Lec,
    #[serde(rename = "FEC")]
    Fec,
    #[serde(rename = "ErrorFree")]
    ErrorFree,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Mix, Split::Lec, Split::Fec, Split::ErrorFree];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Mix => "MIX",
            Split::Lec => "LEC",
            Split::Fec => "FEC",
            Split::ErrorFree => "ErrorFree",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mix" => Ok(Split::Mix),
            "lec" => Ok(Split::Lec),
            "fec" => Ok(Split::Fec),
            "errorfree" | "error-free" | "error_free" => Ok(Split::ErrorFree),
            other => Err(format!("unknown split: {other:?}")),
        }
    }
}

/// Correction method dispatched by the experiment runner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Prompt,
    Srag,
    Urag,
    Agent,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Prompt => "prompt",
            Method::Srag => "srag",
            Method::Urag => "urag",
            Method::Agent => "agent",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "prompt" => Ok(Method::Prompt),
            "srag" | "s-rag" => Ok(Method::Srag),
            "urag" | "u-rag" => Ok(Method::Urag),
            "agent" => Ok(Method::Agent),
            other => Err(format!("unknown method: {other:?}")),
        }
    }
}
