//! The three non-agentic correction methods: prompt-only, sequential RAG
//! (linguistic pass, then evidence-grounded factual pass) and unified RAG
//! (one retrieval-augmented pass over both error families).
//!
//! Every method returns an [`EditSet`] anchored in the original source text
//! plus a [`PipelineTrace`] recording prompts, raw responses, queries,
//! evidence and drop diagnostics per stage.

use crate::edit::{apply_edits, extract_edits, EditOperation, EditSet, ErrorType, Paragraph};
use crate::prompts::{fill_template, PromptSet};
use crate::providers::{
    parse_corrections, parse_queries, ChatGateway, ChatRequest, Correction, EvidenceItem,
    ParseError, ProviderError, Searcher, DEFAULT_TEMPERATURE,
};
use crate::Method;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_QUERIES: usize = 3;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub method: Method,
    pub model: String,
    pub temperature: f64,
    /// Search queries per paragraph, clamped to `[0, 3]`.
    pub max_queries: usize,
    /// Injected verbatim into prompts that take `{current_time}`; never
    /// wall-clock, so replays stay deterministic.
    pub current_time: String,
    /// Resolve multi-occurrence anchors to their first occurrence instead of
    /// dropping them.
    pub resolve_ambiguous_to_first: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            method: Method::Prompt,
            model: "default".to_owned(),
            temperature: DEFAULT_TEMPERATURE,
            max_queries: MAX_QUERIES,
            current_time: "2025-01-01 00:00".to_owned(),
            resolve_ambiguous_to_first: false,
        }
    }
}

impl PipelineConfig {
    pub fn for_method(method: Method) -> Self {
        PipelineConfig { method, ..PipelineConfig::default() }
    }

    fn query_cap(&self) -> usize {
        self.max_queries.min(MAX_QUERIES)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    NoOp,
    AnchorNotFound,
    AnchorAmbiguous,
    Overlap,
}

/// Why one parsed correction did not become an edit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapDiagnostic {
    pub kind: DiagnosticKind,
    pub correction: Correction,
    pub detail: String,
}

/// One pipeline stage: what was sent, what came back, what it became.
/// `corrections.len() == edits.len() + diagnostics.len()` always.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTrace {
    pub stage: String,
    pub system_prompt: String,
    pub raw_response: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub queries: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evidence: Vec<EvidenceItem>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub corrections: Vec<Correction>,
    pub edits: EditSet,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<MapDiagnostic>,
    /// Degradations that are not per-correction drops (failed searches,
    /// malformed query payloads).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub stages: Vec<StageTrace>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Maps model corrections onto source-anchored edits.
///
/// No-ops are dropped; anchors must occur exactly once in `text` (ambiguous
/// and missing anchors are dropped with diagnostics); an edit overlapping an
/// earlier accepted one is dropped. Total: failures become diagnostics, and
/// every correction lands in exactly one of the two outputs.
pub fn map_corrections(
    text: &Paragraph,
    corrections: &[Correction],
) -> (EditSet, Vec<MapDiagnostic>) {
    map_corrections_with(text, corrections, false)
}

pub fn map_corrections_with(
    text: &Paragraph,
    corrections: &[Correction],
    resolve_ambiguous_to_first: bool,
) -> (EditSet, Vec<MapDiagnostic>) {
    let mut accepted: Vec<EditOperation> = Vec::new();
    let mut diagnostics = Vec::new();
    let diag = |kind, c: &Correction, detail: String| MapDiagnostic {
        kind,
        correction: c.clone(),
        detail,
    };
    for c in corrections {
        if c.is_noop() {
            diagnostics.push(diag(
                DiagnosticKind::NoOp,
                c,
                format!("correction leaves {:?} unchanged", c.original),
            ));
            continue;
        }
        let occurrences = text.find_all(&c.original);
        let span = match occurrences.len() {
            0 => {
                diagnostics.push(diag(
                    DiagnosticKind::AnchorNotFound,
                    c,
                    format!("{:?} does not occur in the text", c.original),
                ));
                continue;
            }
            1 => occurrences[0],
            n if resolve_ambiguous_to_first => {
                let _ = n;
                occurrences[0]
            }
            n => {
                diagnostics.push(diag(
                    DiagnosticKind::AnchorAmbiguous,
                    c,
                    format!("{:?} occurs {n} times", c.original),
                ));
                continue;
            }
        };
        if accepted.iter().any(|e| span.0 < e.end && e.start < span.1) {
            diagnostics.push(diag(
                DiagnosticKind::Overlap,
                c,
                format!("{:?} overlaps an earlier accepted edit", c.original),
            ));
            continue;
        }
        accepted.push(EditOperation::new(
            span.0,
            span.1,
            c.original.clone(),
            c.corrected.clone(),
            ErrorType::Unknown,
        ));
    }
    (EditSet::new(accepted), diagnostics)
}

/// Formats the evidence block appended to correction prompts: numbered
/// 【标题】/【链接】/【时间】/【内容】items in retrieval order.
pub fn format_evidence_block(items: &[EvidenceItem]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, e)| {
            format!(
                "{}. 【标题】{}【链接】{}【时间】{}【内容】{}",
                i + 1,
                e.title,
                e.link,
                e.timestamp,
                e.snippet
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Drops evidence items whose link was already seen, keeping retrieval order.
pub fn dedup_evidence(items: Vec<EvidenceItem>) -> Vec<EvidenceItem> {
    let mut seen = std::collections::HashSet::new();
    items.into_iter().filter(|e| seen.insert(e.link.clone())).collect()
}

fn attach_evidence(system: String, evidence: &[EvidenceItem]) -> String {
    if evidence.is_empty() {
        system
    } else {
        format!("{system}\n\n# 参考资料\n\n{}", format_evidence_block(evidence))
    }
}

#[allow(clippy::too_many_arguments)]
fn correction_stage(
    gateway: &dyn ChatGateway,
    config: &PipelineConfig,
    stage: &str,
    system: String,
    text: &Paragraph,
    evidence: Vec<EvidenceItem>,
    queries: Vec<String>,
    notes: Vec<String>,
) -> Result<StageTrace, PipelineError> {
    let system = attach_evidence(system, &evidence);
    let request = ChatRequest::new(config.model.clone(), system.clone())
        .with_user(text.as_str().to_owned())
        .with_temperature(config.temperature);
    let response = gateway.chat(&request)?;
    let corrections = parse_corrections(&response.text)?;
    let (edits, diagnostics) =
        map_corrections_with(text, &corrections, config.resolve_ambiguous_to_first);
    Ok(StageTrace {
        stage: stage.to_owned(),
        system_prompt: system,
        raw_response: response.text,
        queries,
        evidence,
        corrections,
        edits,
        diagnostics,
        notes,
    })
}

/// Prompt-only baseline: one call with the unified proofreading prompt, no
/// evidence.
pub fn run_prompt(
    gateway: &dyn ChatGateway,
    text: &Paragraph,
    config: &PipelineConfig,
    prompts: &PromptSet,
) -> Result<(EditSet, PipelineTrace), PipelineError> {
    let system =
        fill_template(&prompts.unified, &[("current_time", config.current_time.as_str())]);
    let stage =
        correction_stage(gateway, config, "correct", system, text, vec![], vec![], vec![])?;
    let edits = stage.edits.clone();
    Ok((edits, PipelineTrace { stages: vec![stage] }))
}

/// Asks the model for up to three search queries for uncertain claims.
/// A malformed payload degrades to no queries, with a note.
pub fn extract_queries(
    gateway: &dyn ChatGateway,
    text: &Paragraph,
    config: &PipelineConfig,
    prompts: &PromptSet,
) -> Result<(Vec<String>, StageTrace), PipelineError> {
    let system = fill_template(&prompts.query_extraction, &[]);
    let request = ChatRequest::new(config.model.clone(), system.clone())
        .with_user(text.as_str().to_owned())
        .with_temperature(config.temperature);
    let response = gateway.chat(&request)?;
    let mut notes = Vec::new();
    let queries = match parse_queries(&response.text) {
        Ok(mut queries) => {
            queries.truncate(config.query_cap());
            queries
        }
        Err(e) => {
            notes.push(format!("query extraction degraded to no queries: {e}"));
            Vec::new()
        }
    };
    let trace = StageTrace {
        stage: "queries".to_owned(),
        system_prompt: system,
        raw_response: response.text,
        queries: queries.clone(),
        notes,
        ..StageTrace::default()
    };
    Ok((queries, trace))
}

fn gather_evidence(
    searcher: &Searcher,
    queries: &[String],
) -> (Vec<EvidenceItem>, Vec<String>) {
    let mut evidence = Vec::new();
    let mut notes = Vec::new();
    for q in queries {
        match searcher.search(q) {
            Ok(items) => evidence.extend(items),
            Err(e) => notes.push(format!("search failed for {q:?}: {e}")),
        }
    }
    (dedup_evidence(evidence), notes)
}

/// Unified RAG: query extraction, retrieval, then one correction pass with
/// the evidence block appended to the unified prompt. With no evidence the
/// request is identical to [`run_prompt`].
pub fn run_urag(
    gateway: &dyn ChatGateway,
    searcher: &Searcher,
    text: &Paragraph,
    config: &PipelineConfig,
    prompts: &PromptSet,
) -> Result<(EditSet, PipelineTrace), PipelineError> {
    let (queries, query_trace) = extract_queries(gateway, text, config, prompts)?;
    let (evidence, notes) = gather_evidence(searcher, &queries);
    let system =
        fill_template(&prompts.unified, &[("current_time", config.current_time.as_str())]);
    let stage =
        correction_stage(gateway, config, "correct", system, text, evidence, queries, notes)?;
    let edits = stage.edits.clone();
    Ok((edits, PipelineTrace { stages: vec![query_trace, stage] }))
}

/// Sequential RAG: a linguistic-only pass normalizes the text, then a
/// factual-only RAG pass runs on the intermediate output. The returned edits
/// are re-extracted against the original source so scoring is always against
/// the same gold. Stage-2 corrections whose anchors were invalidated by
/// stage 1 drop out with diagnostics.
pub fn run_srag(
    gateway: &dyn ChatGateway,
    searcher: &Searcher,
    text: &Paragraph,
    config: &PipelineConfig,
    prompts: &PromptSet,
) -> Result<(EditSet, PipelineTrace), PipelineError> {
    // Stage 1: linguistic normalization without tools.
    let stage1 = correction_stage(
        gateway,
        config,
        "lec",
        fill_template(&prompts.lec_only, &[]),
        text,
        vec![],
        vec![],
        vec![],
    )?;
    let intermediate = apply_edits(text, &stage1.edits).expect("mapped edits are valid");

    // Stage 2: evidence-grounded factual pass over the stage-1 output.
    let (queries, query_trace) = extract_queries(gateway, &intermediate, config, prompts)?;
    let (evidence, notes) = gather_evidence(searcher, &queries);
    let stage2 = correction_stage(
        gateway,
        config,
        "fec",
        fill_template(&prompts.fec_only, &[]),
        &intermediate,
        evidence,
        queries,
        notes,
    )?;
    let finalized = apply_edits(&intermediate, &stage2.edits).expect("mapped edits are valid");

    let edits = extract_edits(text, &finalized);
    Ok((edits, PipelineTrace { stages: vec![stage1, query_trace, stage2] }))
}


#[cfg(test)]
mod properties {
    use super::*;
    use crate::edit::validate_edits;
    use proptest::prelude::*;

    proptest! {
        /// Mapping is total: every correction becomes exactly one edit or one
        /// diagnostic, and accepted edits always validate against the source.
        #[test]
        fn mapping_partitions_corrections(
            text in "[甲乙丙丁戊，。a-c]{1,20}",
            pairs in proptest::collection::vec(("[甲乙丙丁戊，。a-c]{0,4}", "[甲乙丙己]{0,3}"), 0..6),
        ) {
            let text = Paragraph::from(text);
            let corrections: Vec<Correction> = pairs
                .into_iter()
                .map(|(o, c)| Correction::new(o, c))
                .collect();
            let (edits, diagnostics) = map_corrections(&text, &corrections);
            prop_assert_eq!(edits.len() + diagnostics.len(), corrections.len());
            prop_assert!(validate_edits(&text, &edits).is_empty());
        }
    }
}
