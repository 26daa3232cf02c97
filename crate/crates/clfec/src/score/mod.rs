//! Word-level strict-match evaluation.
//!
//! Character-span edits are projected onto word spans produced by a
//! tokenizer, and a predicted edit earns detection credit when its projected
//! token range equals a gold edit's range, and correction credit when the
//! replacement text also matches after NFC normalization. Full- and
//! half-width punctuation are deliberately not folded.

mod report;

pub use report::{EditRateTally, Prf, ReportBuilder, ScoreReport, SplitScores, TypeTally};

use crate::edit::{validate_edits, EditSet, ErrorType, Paragraph, Violation};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// One token of a segmented paragraph; spans are code-point indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub start: usize,
    pub end: usize,
}

/// Word list driving the default maximum-matching segmenter.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    words: HashSet<String>,
    max_len: usize,
}

impl Lexicon {
    /// Builds a lexicon, silently skipping empty entries.
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut lex = Lexicon::default();
        for w in words {
            let w: String = w.into();
            if w.is_empty() {
                continue;
            }
            lex.max_len = lex.max_len.max(w.chars().count());
            lex.words.insert(w);
        }
        lex
    }

    /// Parses the plain-text format: UTF-8, one word per line, `#` comments.
    pub fn parse(text: &str) -> Self {
        Lexicon::new(text.lines().filter_map(|line| {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                None
            } else {
                Some(line.to_owned())
            }
        }))
    }

    /// The word list shipped with the crate.
    pub fn builtin() -> Self {
        Lexicon::parse(include_str!("../../assets/lexicon.txt"))
    }

    pub fn from_path(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut words = Vec::new();
        for line in reader.lines() {
            words.push(line?);
        }
        Ok(Lexicon::parse(&words.join("\n")))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn max_word_len(&self) -> usize {
        self.max_len
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Swappable tokenizer interface so an external segmenter can be bound for
/// parity with other evaluation stacks.
pub trait Segmenter: Send + Sync {
    /// Must tile the input: concatenated surfaces equal the text, spans are
    /// contiguous and non-overlapping.
    fn segment(&self, text: &str) -> Vec<Token>;
}

/// Greedy forward longest-match segmenter over a [`Lexicon`];
/// out-of-lexicon characters become single-character tokens.
#[derive(Debug, Clone, Default)]
pub struct MaxMatchSegmenter {
    lexicon: Lexicon,
}

impl MaxMatchSegmenter {
    pub fn new(lexicon: Lexicon) -> Self {
        MaxMatchSegmenter { lexicon }
    }

    pub fn builtin() -> Self {
        MaxMatchSegmenter::new(Lexicon::builtin())
    }
}

impl Segmenter for MaxMatchSegmenter {
    fn segment(&self, text: &str) -> Vec<Token> {
        segment(text, &self.lexicon)
    }
}

/// Greedy forward longest-match segmentation; deterministic and total.
pub fn segment(text: &str, lexicon: &Lexicon) -> Vec<Token> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut tokens = Vec::new();
    let mut i = 0usize;
    while i < n {
        let mut taken = 1usize;
        let longest = lexicon.max_word_len().min(n - i);
        for len in (2..=longest).rev() {
            let candidate: String = chars[i..i + len].iter().collect();
            if lexicon.contains(&candidate) {
                taken = len;
                break;
            }
        }
        tokens.push(Token {
            surface: chars[i..i + taken].iter().collect(),
            start: i,
            end: i + taken,
        });
        i += taken;
    }
    tokens
}

/// An edit projected onto token indices; the match key for strict scoring is
/// the `[token_start, token_end)` range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordEdit {
    pub token_start: usize,
    pub token_end: usize,
    pub replacement: String,
    pub error_type: ErrorType,
}

/// Projects character-span edits onto the minimal covering token ranges.
///
/// Pure insertions map to the boundary index of the first token at or after
/// the insertion point. Edits sharing a projected range merge, concatenating
/// replacements in source order.
pub fn project_to_words(text: &Paragraph, edits: &EditSet, tokens: &[Token]) -> Vec<WordEdit> {
    debug_assert!(validate_edits(text, edits).is_empty());
    let mut merged: BTreeMap<(usize, usize), WordEdit> = BTreeMap::new();
    for e in edits.iter() {
        let (a, b) = if e.is_insertion() {
            let k = tokens.partition_point(|t| t.start < e.start);
            (k, k)
        } else {
            let first = tokens.partition_point(|t| t.end <= e.start);
            let last = tokens.partition_point(|t| t.end < e.end);
            (first, last + 1)
        };
        merged
            .entry((a, b))
            .and_modify(|w| w.replacement.push_str(&e.replacement))
            .or_insert_with(|| WordEdit {
                token_start: a,
                token_end: b,
                replacement: e.replacement.clone(),
                error_type: e.error_type,
            });
    }
    merged.into_values().collect()
}

/// Strict-match tallies for one sample (or a micro-sum of samples).
/// Counts are over word-projected edits, so `det_tp + det_fn` equals the
/// projected gold edit count and `det_tp + det_fp` the projected prediction
/// count; `cor_tp <= det_tp` always.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchCounts {
    pub det_tp: usize,
    pub det_fp: usize,
    pub det_fn: usize,
    pub cor_tp: usize,
    pub cor_fp: usize,
    pub cor_fn: usize,
}

impl MatchCounts {
    pub fn merge(mut self, other: MatchCounts) -> MatchCounts {
        self.det_tp += other.det_tp;
        self.det_fp += other.det_fp;
        self.det_fn += other.det_fn;
        self.cor_tp += other.cor_tp;
        self.cor_fp += other.cor_fp;
        self.cor_fn += other.cor_fn;
        self
    }
}

impl std::iter::Sum for MatchCounts {
    fn sum<I: Iterator<Item = MatchCounts>>(iter: I) -> Self {
        iter.fold(MatchCounts::default(), MatchCounts::merge)
    }
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("{which} edits do not match the source text: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    MismatchedSource { which: &'static str, violations: Vec<Violation> },
    #[error("edit rate is undefined for empty text")]
    EmptyText,
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// Scores one prediction against one gold set over the same source text.
///
/// Detection match: equal projected token range. Correction match: detection
/// match plus identical replacement after NFC normalization. `error_type` is
/// not part of the match key.
pub fn score_sample(
    gold: &EditSet,
    pred: &EditSet,
    text: &Paragraph,
    segmenter: &dyn Segmenter,
) -> Result<MatchCounts, ScoreError> {
    let violations = validate_edits(text, gold);
    if !violations.is_empty() {
        return Err(ScoreError::MismatchedSource { which: "gold", violations });
    }
    let violations = validate_edits(text, pred);
    if !violations.is_empty() {
        return Err(ScoreError::MismatchedSource { which: "predicted", violations });
    }
    let tokens = segmenter.segment(text.as_str());
    let gold_words = project_to_words(text, gold, &tokens);
    let pred_words = project_to_words(text, pred, &tokens);

    // Projected ranges are unique within each side after merging, so the
    // greedy one-to-one matching reduces to key intersection.
    let gold_by_key: BTreeMap<(usize, usize), &WordEdit> =
        gold_words.iter().map(|w| ((w.token_start, w.token_end), w)).collect();
    let mut det_tp = 0usize;
    let mut cor_tp = 0usize;
    for p in &pred_words {
        if let Some(g) = gold_by_key.get(&(p.token_start, p.token_end)) {
            det_tp += 1;
            if nfc(&g.replacement) == nfc(&p.replacement) {
                cor_tp += 1;
            }
        }
    }
    Ok(MatchCounts {
        det_tp,
        det_fp: pred_words.len() - det_tp,
        det_fn: gold_words.len() - det_tp,
        cor_tp,
        cor_fp: pred_words.len() - cor_tp,
        cor_fn: gold_words.len() - cor_tp,
    })
}

/// Micro-aggregated precision/recall/F1 for detection and correction.
pub fn aggregate<I: IntoIterator<Item = MatchCounts>>(samples: I) -> (Prf, Prf) {
    let total: MatchCounts = samples.into_iter().sum();
    (
        Prf::from_counts(total.det_tp, total.det_fp, total.det_fn),
        Prf::from_counts(total.cor_tp, total.cor_fp, total.cor_fn),
    )
}

/// Edits per 100 characters of `text`.
pub fn edit_rate(pred: &EditSet, text: &Paragraph) -> Result<f64, ScoreError> {
    let n = text.char_len();
    if n == 0 {
        return Err(ScoreError::EmptyText);
    }
    Ok(100.0 * pred.len() as f64 / n as f64)
}

/// Detection recall per gold error type: a gold edit counts as recalled when
/// its projected token range appears among the predicted ranges.
pub fn recall_by_type(
    gold: &EditSet,
    pred: &EditSet,
    text: &Paragraph,
    segmenter: &dyn Segmenter,
) -> Result<BTreeMap<ErrorType, TypeTally>, ScoreError> {
    let violations = validate_edits(text, gold);
    if !violations.is_empty() {
        return Err(ScoreError::MismatchedSource { which: "gold", violations });
    }
    let violations = validate_edits(text, pred);
    if !violations.is_empty() {
        return Err(ScoreError::MismatchedSource { which: "predicted", violations });
    }
    let tokens = segmenter.segment(text.as_str());
    let pred_keys: HashSet<(usize, usize)> = project_to_words(text, pred, &tokens)
        .into_iter()
        .map(|w| (w.token_start, w.token_end))
        .collect();
    let mut tallies: BTreeMap<ErrorType, TypeTally> = BTreeMap::new();
    for e in gold.iter() {
        let single = EditSet::new(vec![e.clone()]);
        let words = project_to_words(text, &single, &tokens);
        let key = (words[0].token_start, words[0].token_end);
        let tally = tallies.entry(e.error_type).or_default();
        tally.total += 1;
        if pred_keys.contains(&key) {
            tally.recalled += 1;
        }
    }
    Ok(tallies)
}
