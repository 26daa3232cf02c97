//! Dataset I/O and statistics.
//!
//! Corpora are UTF-8 JSONL, one record per line, with fields `id`, `type`,
//! `input`, `corrected`, `cors` (list of `{span: [s, e), type, original,
//! corrected}`) and optional `domain`. Spans count code points into `input`.
//! Error-type labels on disk map through a configurable [`TypeLabelMap`].

mod report;
mod run;

pub use report::{render_report, render_stats, ReportFormat};
pub use run::{
    build_providers, load_predictions, persist_run, run_experiment, score_records,
    ExperimentProviders, PredictionRecord, RunError, RunManifest, RunOutput,
};

use crate::edit::{apply_edits, validate_edits, EditOperation, EditSet, ErrorType, Paragraph};
use crate::Split;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

/// Maps on-disk error-type labels to [`ErrorType`] and back. The defaults
/// cover `Word_Error` / `Punc_Error` / `Fact_Error` / `Gram_Error`; datasets
/// with other label spellings bind via a custom map, no code changes.
#[derive(Debug, Clone)]
pub struct TypeLabelMap {
    to_type: BTreeMap<String, ErrorType>,
    to_label: BTreeMap<ErrorType, String>,
}

impl Default for TypeLabelMap {
    fn default() -> Self {
        TypeLabelMap::new([
            ("Word_Error", ErrorType::Word),
            ("Punc_Error", ErrorType::Punctuation),
            ("Fact_Error", ErrorType::Fact),
            ("Gram_Error", ErrorType::Grammar),
            ("Unknown", ErrorType::Unknown),
        ])
    }
}

impl TypeLabelMap {
    /// The first label listed for each type becomes its output label.
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, ErrorType)>) -> Self {
        let mut to_type = BTreeMap::new();
        let mut to_label = BTreeMap::new();
        for (label, ty) in pairs {
            to_type.insert(label.to_owned(), ty);
            to_label.entry(ty).or_insert_with(|| label.to_owned());
        }
        TypeLabelMap { to_type, to_label }
    }

    /// Unmapped labels degrade to [`ErrorType::Unknown`].
    pub fn parse(&self, label: &str) -> ErrorType {
        self.to_type.get(label).copied().unwrap_or(ErrorType::Unknown)
    }

    pub fn label(&self, ty: ErrorType) -> &str {
        self.to_label.get(&ty).map(String::as_str).unwrap_or("Unknown")
    }
}

/// One dataset line: a corrupted input, its gold corrected text and the gold
/// edits mapping one onto the other.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    pub id: String,
    pub split: Split,
    pub input: Paragraph,
    pub corrected: Paragraph,
    pub gold_edits: EditSet,
    pub domain: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct CorWire {
    pub span: [usize; 2],
    #[serde(rename = "type")]
    pub kind: String,
    pub original: String,
    pub corrected: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RecordWire {
    id: String,
    #[serde(rename = "type")]
    split: String,
    input: String,
    corrected: String,
    #[serde(default)]
    cors: Vec<CorWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<String>,
}

pub(crate) fn edits_to_wire(edits: &EditSet, labels: &TypeLabelMap) -> Vec<CorWire> {
    edits
        .iter()
        .map(|e| CorWire {
            span: [e.start, e.end],
            kind: labels.label(e.error_type).to_owned(),
            original: e.original.clone(),
            corrected: e.replacement.clone(),
        })
        .collect()
}

pub(crate) fn edits_from_wire(cors: &[CorWire], labels: &TypeLabelMap) -> EditSet {
    EditSet::new(
        cors.iter()
            .map(|c| {
                EditOperation::new(
                    c.span[0],
                    c.span[1],
                    c.original.clone(),
                    c.corrected.clone(),
                    labels.parse(&c.kind),
                )
            })
            .collect(),
    )
}

/// One bad corpus line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub detail: String,
}

impl std::fmt::Display for LineIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.detail)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus has {} invalid lines; first: {}", .0.len(), .0[0])]
    Invalid(Vec<LineIssue>),
}

/// Parses a corpus from JSONL text; every record must satisfy its invariants
/// (`apply_edits(input, gold) == corrected`, error-free records clean).
/// All offending lines are reported, not just the first.
pub fn parse_corpus(text: &str, labels: &TypeLabelMap) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let wire: RecordWire = match serde_json::from_str(trimmed) {
            Ok(w) => w,
            Err(e) => {
                issues.push(LineIssue { line: line_no, detail: format!("parse error: {e}") });
                continue;
            }
        };
        match build_record(wire, labels) {
            Ok(record) => records.push(record),
            Err(detail) => issues.push(LineIssue { line: line_no, detail }),
        }
    }
    if issues.is_empty() {
        Ok(records)
    } else {
        Err(CorpusError::Invalid(issues))
    }
}

fn build_record(wire: RecordWire, labels: &TypeLabelMap) -> Result<CorpusRecord, String> {
    let split = Split::from_str(&wire.split)?;
    let input = Paragraph::from(wire.input);
    let corrected = Paragraph::from(wire.corrected);
    let gold_edits = edits_from_wire(&wire.cors, labels);
    let violations = validate_edits(&input, &gold_edits);
    if let Some(v) = violations.first() {
        return Err(format!("gold edits invalid: {v}"));
    }
    let applied = apply_edits(&input, &gold_edits).expect("validated");
    if applied != corrected {
        return Err("applying gold edits to input does not yield the corrected text".to_owned());
    }
    if split == Split::ErrorFree {
        if !gold_edits.is_empty() {
            return Err("error-free record carries gold edits".to_owned());
        }
        if input != corrected {
            return Err("error-free record has input != corrected".to_owned());
        }
    }
    Ok(CorpusRecord { id: wire.id, split, input, corrected, gold_edits, domain: wire.domain })
}

pub fn load_corpus(
    path: impl AsRef<Path>,
    labels: &TypeLabelMap,
) -> Result<Vec<CorpusRecord>, CorpusError> {
    let text = std::fs::read_to_string(path)?;
    parse_corpus(&text, labels)
}

/// Writes records as JSONL in the on-disk schema.
pub fn write_corpus(
    mut out: impl Write,
    records: &[CorpusRecord],
    labels: &TypeLabelMap,
) -> std::io::Result<()> {
    for r in records {
        let wire = RecordWire {
            id: r.id.clone(),
            split: r.split.as_str().to_owned(),
            input: r.input.as_str().to_owned(),
            corrected: r.corrected.as_str().to_owned(),
            cors: edits_to_wire(&r.gold_edits, labels),
            domain: r.domain.clone(),
        };
        serde_json::to_writer(&mut out, &wire)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Corpus-level statistics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub records: usize,
    pub by_split: BTreeMap<Split, usize>,
    pub by_domain: BTreeMap<String, usize>,
    pub total_chars: usize,
    pub mean_chars: f64,
    pub total_errors: usize,
    pub errors_per_10k_chars: f64,
    pub errors_by_type: BTreeMap<ErrorType, usize>,
}

pub fn stats(records: &[CorpusRecord]) -> CorpusStats {
    let mut s = CorpusStats { records: records.len(), ..CorpusStats::default() };
    for r in records {
        *s.by_split.entry(r.split).or_default() += 1;
        if let Some(domain) = &r.domain {
            *s.by_domain.entry(domain.clone()).or_default() += 1;
        }
        s.total_chars += r.input.char_len();
        s.total_errors += r.gold_edits.len();
        for e in r.gold_edits.iter() {
            *s.errors_by_type.entry(e.error_type).or_default() += 1;
        }
    }
    if s.records > 0 {
        s.mean_chars = s.total_chars as f64 / s.records as f64;
    }
    if s.total_chars > 0 {
        s.errors_per_10k_chars = 10_000.0 * s.total_errors as f64 / s.total_chars as f64;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_the_law_sample_record() {
        let text = include_str!("../../tests/data/law_sample.jsonl");
        let records = parse_corpus(text, &TypeLabelMap::default()).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.split, Split::Mix);
        assert_eq!(r.gold_edits.len(), 3);
        let fact = &r.gold_edits.edits()[0];
        assert_eq!((fact.start, fact.end), (191, 195));
        assert_eq!(fact.original, "三十万元");
        assert_eq!(fact.replacement, "五十万元");
        assert_eq!(fact.error_type, ErrorType::Fact);
        assert_eq!(r.domain.as_deref(), Some("law"));
        assert_eq!(apply_edits(&r.input, &r.gold_edits).unwrap(), r.corrected);
    }

    #[test]
    fn empty_file_is_an_empty_corpus() {
        assert!(parse_corpus("", &TypeLabelMap::default()).unwrap().is_empty());
        assert!(parse_corpus("\n\n", &TypeLabelMap::default()).unwrap().is_empty());
    }

    #[test]
    fn span_mismatch_is_reported_with_line_number() {
        let line = serde_json::json!({
            "id": "r1", "type": "LEC", "input": "abc", "corrected": "xbc",
            "cors": [{"span": [0, 1], "type": "Word_Error", "original": "z", "corrected": "x"}],
        })
        .to_string();
        let err = parse_corpus(&format!("\n{line}"), &TypeLabelMap::default()).unwrap_err();
        match err {
            CorpusError::Invalid(issues) => {
                assert_eq!(issues[0].line, 2);
                assert!(issues[0].detail.contains("original does not match"));
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn corrected_mismatch_and_dirty_error_free_are_invalid() {
        let bad_corrected = serde_json::json!({
            "id": "r1", "type": "LEC", "input": "abc", "corrected": "abc",
            "cors": [{"span": [0, 1], "type": "Word_Error", "original": "a", "corrected": "x"}],
        })
        .to_string();
        assert!(parse_corpus(&bad_corrected, &TypeLabelMap::default()).is_err());

        let dirty_clean = serde_json::json!({
            "id": "r2", "type": "ErrorFree", "input": "abc", "corrected": "abx", "cors": [],
        })
        .to_string();
        assert!(parse_corpus(&dirty_clean, &TypeLabelMap::default()).is_err());
    }

    #[test]
    fn unknown_labels_degrade_to_unknown() {
        let labels = TypeLabelMap::default();
        assert_eq!(labels.parse("Typo_Error"), ErrorType::Unknown);
        assert_eq!(labels.parse("Fact_Error"), ErrorType::Fact);
        assert_eq!(labels.label(ErrorType::Punctuation), "Punc_Error");
        let custom = TypeLabelMap::new([("W", ErrorType::Word)]);
        assert_eq!(custom.parse("W"), ErrorType::Word);
    }

    #[test]
    fn corpus_round_trips_through_write() {
        let labels = TypeLabelMap::default();
        let text = include_str!("../../tests/data/law_sample.jsonl");
        let records = parse_corpus(text, &labels).unwrap();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &records, &labels).unwrap();
        let reloaded = parse_corpus(std::str::from_utf8(&buf).unwrap(), &labels).unwrap();
        assert_eq!(records, reloaded);
    }

    #[test]
    fn stats_on_synthetic_records() {
        let labels = TypeLabelMap::default();
        let lines = vec![
            serde_json::json!({
                "id": "a", "type": "LEC", "input": "一二三四五六七八九十",
                "corrected": "壹二三四五六七八九十",
                "cors": [{"span": [0, 1], "type": "Word_Error", "original": "一", "corrected": "壹"}],
                "domain": "law",
            }),
            serde_json::json!({
                "id": "b", "type": "FEC", "input": "甲乙丙丁戊己庚辛壬癸",
                "corrected": "甲乙丙丁戊己庚辛壬子",
                "cors": [{"span": [9, 10], "type": "Fact_Error", "original": "癸", "corrected": "子"}],
                "domain": "finance",
            }),
        ];
        let text: String =
            lines.into_iter().map(|l| l.to_string() + "\n").collect();
        let records = parse_corpus(&text, &labels).unwrap();
        let s = stats(&records);
        // hand-computed: 2 records, 20 chars, 2 errors -> 1000 per 10k, mean 10
        assert_eq!(s.records, 2);
        assert_eq!(s.total_chars, 20);
        assert_eq!(s.mean_chars, 10.0);
        assert_eq!(s.total_errors, 2);
        assert_eq!(s.errors_per_10k_chars, 1000.0);
        assert_eq!(s.by_split[&Split::Lec], 1);
        assert_eq!(s.by_domain["finance"], 1);
        assert_eq!(s.errors_by_type[&ErrorType::Word], 1);
        assert_eq!(s.errors_by_type[&ErrorType::Fact], 1);
    }

    #[test]
    fn stats_on_empty_corpus_are_zero() {
        let s = stats(&[]);
        assert_eq!(s.records, 0);
        assert_eq!(s.total_chars, 0);
        assert_eq!(s.mean_chars, 0.0);
        assert_eq!(s.errors_per_10k_chars, 0.0);
    }
}
