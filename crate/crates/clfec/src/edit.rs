//! Span-edit algebra over code-point indices.
//!
//! Every index, span and length in this crate counts Unicode scalar values
//! (`char`s), never bytes. Byte indexing would break every span anchor the
//! moment a paragraph contains CJK text.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// A paragraph of text addressed by code-point index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Paragraph(String);

impl Paragraph {
    pub fn new(text: impl Into<String>) -> Self {
        Paragraph(text.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Length in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.0.chars().count()
    }

    pub fn chars(&self) -> std::str::Chars<'_> {
        self.0.chars()
    }

    /// Byte offset of code-point index `idx`; `idx == char_len()` maps to the
    /// end of the string.
    pub fn byte_offset(&self, idx: usize) -> Option<usize> {
        let mut seen = 0usize;
        for (byte, _) in self.0.char_indices() {
            if seen == idx {
                return Some(byte);
            }
            seen += 1;
        }
        (seen == idx).then_some(self.0.len())
    }

    /// Slice by code-point indices `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Option<&str> {
        if start > end {
            return None;
        }
        let b0 = self.byte_offset(start)?;
        let b1 = self.byte_offset(end)?;
        Some(&self.0[b0..b1])
    }

    /// Replaces the code-point span `[start, end)` with `replacement`.
    /// Returns `None` when the span is out of bounds.
    pub fn splice(&self, start: usize, end: usize, replacement: &str) -> Option<Paragraph> {
        if start > end {
            return None;
        }
        let b0 = self.byte_offset(start)?;
        let b1 = self.byte_offset(end)?;
        let mut out = String::with_capacity(self.0.len() - (b1 - b0) + replacement.len());
        out.push_str(&self.0[..b0]);
        out.push_str(replacement);
        out.push_str(&self.0[b1..]);
        Some(Paragraph(out))
    }

    /// Char spans of every occurrence of `needle`, in text order, including
    /// overlapping ones (an ambiguity check must see those too).
    pub fn find_all(&self, needle: &str) -> Vec<(usize, usize)> {
        if needle.is_empty() {
            return Vec::new();
        }
        let needle_len = needle.chars().count();
        let mut spans = Vec::new();
        let mut char_idx = 0usize;
        let mut byte_idx = 0usize;
        while byte_idx < self.0.len() {
            if self.0[byte_idx..].starts_with(needle) {
                spans.push((char_idx, char_idx + needle_len));
            }
            let c = self.0[byte_idx..].chars().next().expect("in bounds");
            byte_idx += c.len_utf8();
            char_idx += 1;
        }
        spans
    }
}

impl From<&str> for Paragraph {
    fn from(s: &str) -> Self {
        Paragraph(s.to_owned())
    }
}

impl From<String> for Paragraph {
    fn from(s: String) -> Self {
        Paragraph(s)
    }
}

impl AsRef<str> for Paragraph {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Paragraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Coarse category of one edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ErrorType {
    Word,
    Grammar,
    Punctuation,
    Fact,
    Unknown,
}

impl ErrorType {
    pub const ALL: [ErrorType; 5] = [
        ErrorType::Word,
        ErrorType::Grammar,
        ErrorType::Punctuation,
        ErrorType::Fact,
        ErrorType::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorType::Word => "Word",
            ErrorType::Grammar => "Grammar",
            ErrorType::Punctuation => "Punctuation",
            ErrorType::Fact => "Fact",
            ErrorType::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One correction: replace the code-point span `[start, end)` of the host
/// paragraph (whose text there must equal `original`) with `replacement`.
///
/// `start == end` iff `original` is empty (a pure insertion); an empty
/// `replacement` is a deletion. Both empty is invalid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOperation {
    pub start: usize,
    pub end: usize,
    pub original: String,
    pub replacement: String,
    pub error_type: ErrorType,
}

impl EditOperation {
    pub fn new(
        start: usize,
        end: usize,
        original: impl Into<String>,
        replacement: impl Into<String>,
        error_type: ErrorType,
    ) -> Self {
        EditOperation {
            start,
            end,
            original: original.into(),
            replacement: replacement.into(),
            error_type,
        }
    }

    pub fn is_insertion(&self) -> bool {
        self.start == self.end
    }

    pub fn is_deletion(&self) -> bool {
        self.replacement.is_empty()
    }
}

/// A set of edits over one paragraph, kept sorted by `(start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EditSet {
    edits: Vec<EditOperation>,
}

impl EditSet {
    /// Builds an edit set, sorting by `(start, end)`. Sorting alone does not
    /// guarantee validity; see [`validate_edits`].
    pub fn new(mut edits: Vec<EditOperation>) -> Self {
        edits.sort_by_key(|e| (e.start, e.end));
        EditSet { edits }
    }

    pub fn empty() -> Self {
        EditSet::default()
    }

    pub fn edits(&self) -> &[EditOperation] {
        &self.edits
    }

    pub fn len(&self) -> usize {
        self.edits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edits.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, EditOperation> {
        self.edits.iter()
    }
}

impl IntoIterator for EditSet {
    type Item = EditOperation;
    type IntoIter = std::vec::IntoIter<EditOperation>;

    fn into_iter(self) -> Self::IntoIter {
        self.edits.into_iter()
    }
}

impl<'a> IntoIterator for &'a EditSet {
    type Item = &'a EditOperation;
    type IntoIter = std::slice::Iter<'a, EditOperation>;

    fn into_iter(self) -> Self::IntoIter {
        self.edits.iter()
    }
}

impl FromIterator<EditOperation> for EditSet {
    fn from_iter<T: IntoIterator<Item = EditOperation>>(iter: T) -> Self {
        EditSet::new(iter.into_iter().collect())
    }
}

/// Why one edit of a set is invalid against its source paragraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    OutOfBounds { start: usize, end: usize, text_len: usize },
    Unsorted,
    Overlap { with: usize },
    AnchorMismatch { expected: String },
    EmptyNoOp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Index of the offending edit within the set.
    pub edit: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::OutOfBounds { start, end, text_len } => write!(
                f,
                "edit {}: span [{start}, {end}) out of bounds for text of length {text_len}",
                self.edit
            ),
            ViolationKind::Unsorted => {
                write!(f, "edit {}: not sorted by (start, end)", self.edit)
            }
            ViolationKind::Overlap { with } => {
                write!(f, "edit {}: overlaps edit {with}", self.edit)
            }
            ViolationKind::AnchorMismatch { expected } => write!(
                f,
                "edit {}: original does not match source slice {expected:?}",
                self.edit
            ),
            ViolationKind::EmptyNoOp => {
                write!(f, "edit {}: both original and replacement are empty", self.edit)
            }
        }
    }
}

/// Raised by [`apply_edits`] when the edit set is invalid against the source.
/// Signals corrupt annotation or a programmer error, never model output.
#[derive(Debug, Clone, Error)]
#[error("invalid edit set: {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
pub struct InvalidEdit {
    pub violations: Vec<Violation>,
}

/// Reports every violated invariant of `edits` against `source`.
///
/// Checks bounds, anchor text, sortedness, overlap (including two pure
/// insertions at one index) and empty no-ops. Returns an empty vector when
/// the set is valid.
pub fn validate_edits(source: &Paragraph, edits: &EditSet) -> Vec<Violation> {
    let text_len = source.char_len();
    let mut violations = Vec::new();
    for (i, e) in edits.iter().enumerate() {
        if e.start > e.end || e.end > text_len {
            violations.push(Violation {
                edit: i,
                kind: ViolationKind::OutOfBounds { start: e.start, end: e.end, text_len },
            });
            continue;
        }
        if e.original.is_empty() && e.replacement.is_empty() {
            violations.push(Violation { edit: i, kind: ViolationKind::EmptyNoOp });
        }
        // the anchor check also enforces "start == end iff original empty":
        // a matching anchor on an empty span is necessarily empty
        let slice = source.slice(e.start, e.end).unwrap_or_default();
        if slice != e.original {
            violations.push(Violation {
                edit: i,
                kind: ViolationKind::AnchorMismatch { expected: slice.to_owned() },
            });
        }
    }
    for i in 1..edits.len() {
        let prev = &edits.edits()[i - 1];
        let cur = &edits.edits()[i];
        if (cur.start, cur.end) < (prev.start, prev.end) {
            violations.push(Violation { edit: i, kind: ViolationKind::Unsorted });
            continue;
        }
        let both_insertions_same_index =
            prev.is_insertion() && cur.is_insertion() && prev.start == cur.start;
        if prev.end > cur.start || both_insertions_same_index {
            violations.push(Violation { edit: i, kind: ViolationKind::Overlap { with: i - 1 } });
        }
    }
    violations
}

/// Applies a valid edit set to `source`, producing the target paragraph.
/// Segments outside the edit spans are copied verbatim and in order.
pub fn apply_edits(source: &Paragraph, edits: &EditSet) -> Result<Paragraph, InvalidEdit> {
    let violations = validate_edits(source, edits);
    if !violations.is_empty() {
        return Err(InvalidEdit { violations });
    }
    let mut out = String::with_capacity(source.as_str().len());
    let mut cursor = 0usize;
    for e in edits.iter() {
        out.push_str(source.slice(cursor, e.start).expect("validated span"));
        out.push_str(&e.replacement);
        cursor = e.end;
    }
    out.push_str(source.slice(cursor, source.char_len()).expect("validated span"));
    Ok(Paragraph(out))
}

/// Extracts a minimal edit set turning `source` into `target`.
///
/// A code-point-level alignment (edit-distance DP, unit costs) yields
/// equal/substitute/delete/insert runs; maximal adjacent non-equal runs merge
/// into single [`EditOperation`]s with `error_type` [`ErrorType::Unknown`].
/// Ties prefer substitution over delete+insert, then the leftmost edit start,
/// so the output is deterministic. The total code-point cost of the returned
/// edits equals the source→target edit distance.
pub fn extract_edits(source: &Paragraph, target: &Paragraph) -> EditSet {
    let s: Vec<char> = source.chars().collect();
    let t: Vec<char> = target.chars().collect();
    let n = s.len();
    let m = t.len();
    let w = m + 1;
    // dist[i * w + j] = edit distance between s[i..] and t[j..]
    let mut dist = vec![0u32; (n + 1) * w];
    for j in 0..=m {
        dist[n * w + j] = (m - j) as u32;
    }
    for i in (0..n).rev() {
        dist[i * w + m] = (n - i) as u32;
        for j in (0..m).rev() {
            let diag = dist[(i + 1) * w + j + 1] + u32::from(s[i] != t[j]);
            let del = dist[(i + 1) * w + j] + 1;
            let ins = dist[i * w + j + 1] + 1;
            dist[i * w + j] = diag.min(del).min(ins);
        }
    }

    struct Run {
        start: usize,
        end: usize,
        replacement: String,
    }

    let mut edits = Vec::new();
    let mut run: Option<Run> = None;
    let mut flush = |run: &mut Option<Run>, s: &[char]| {
        if let Some(r) = run.take() {
            let original: String = s[r.start..r.end].iter().collect();
            edits.push(EditOperation::new(
                r.start,
                r.end,
                original,
                r.replacement,
                ErrorType::Unknown,
            ));
        }
    };

    let (mut i, mut j) = (0usize, 0usize);
    while i < n || j < m {
        let here = dist[i * w + j];
        let sub = i < n && j < m && s[i] != t[j] && dist[(i + 1) * w + j + 1] + 1 == here;
        let del = i < n && dist[(i + 1) * w + j] + 1 == here;
        let ins = j < m && dist[i * w + j + 1] + 1 == here;
        if sub || del || ins {
            let r = run.get_or_insert_with(|| Run { start: i, end: i, replacement: String::new() });
            if sub {
                r.end = i + 1;
                r.replacement.push(t[j]);
                i += 1;
                j += 1;
            } else if del {
                r.end = i + 1;
                i += 1;
            } else {
                r.replacement.push(t[j]);
                j += 1;
            }
        } else {
            debug_assert!(i < n && j < m && s[i] == t[j]);
            flush(&mut run, &s);
            i += 1;
            j += 1;
        }
    }
    flush(&mut run, &s);
    EditSet { edits }
}


#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    fn text_strategy() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                prop::char::range('a', 'f'),
                prop::char::range('\u{4e00}', '\u{4e1f}'),
                Just('，'),
                Just('。'),
                Just('😀'),
                Just('Ａ'),
            ],
            0..30,
        )
        .prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn extract_then_apply_round_trips(a in text_strategy(), b in text_strategy()) {
            let source = Paragraph::from(a);
            let target = Paragraph::from(b);
            let set = extract_edits(&source, &target);
            prop_assert!(validate_edits(&source, &set).is_empty());
            prop_assert_eq!(apply_edits(&source, &set).unwrap(), target);
        }
    }
}
