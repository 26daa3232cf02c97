//! Shared test support: independent oracles, random-input generators and the
//! synthetic error-map gateway driving injection tests offline.

#![allow(dead_code)]

use clfec::edit::{EditOperation, EditSet, ErrorType, Paragraph};
use clfec::providers::{ChatGateway, ChatRequest, ChatResponse, ProviderError};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Independent Levenshtein oracle (plain two-row DP, unit costs).
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Total code-point cost of an edit set: max of span lengths per edit.
pub fn edit_cost(set: &EditSet) -> usize {
    set.iter()
        .map(|e| e.original.chars().count().max(e.replacement.chars().count()))
        .sum()
}

/// Mixed alphabet covering ASCII, CJK, full-width punctuation and emoji.
pub fn mixed_alphabet() -> Vec<char> {
    let mut alphabet: Vec<char> = ('a'..='f').collect();
    alphabet.extend('\u{4e00}'..='\u{4e2f}');
    alphabet.extend(['，', '。', '；', '“', '”', '！', 'Ａ', 'μ', '😀', ' ']);
    alphabet
}

pub fn random_text(rng: &mut ChaCha8Rng, alphabet: &[char], len: usize) -> Paragraph {
    Paragraph::from(
        (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect::<String>(),
    )
}

/// Random valid edit set over `text`: non-overlapping spans, sorted, no two
/// insertions at one index, anchors sliced from the text.
pub fn random_edit_set(rng: &mut ChaCha8Rng, text: &Paragraph, alphabet: &[char]) -> EditSet {
    let n = text.char_len();
    let mut edits = Vec::new();
    let mut pos = 0usize;
    while pos < n {
        if rng.random_bool(0.25) {
            let kind = rng.random_range(0..3u8);
            let max_len = (n - pos).min(3);
            let (start, end) = match kind {
                0 => (pos, pos), // insertion
                _ => (pos, pos + rng.random_range(1..=max_len)),
            };
            let original: String = text.slice(start, end).unwrap().to_owned();
            let replacement: String = match kind {
                1 => String::new(), // deletion
                _ => {
                    let len = rng.random_range(1..=3);
                    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
                }
            };
            if !(original.is_empty() && replacement.is_empty()) {
                edits.push(EditOperation::new(start, end, original, replacement, ErrorType::Unknown));
            }
            pos = end + 1; // gap prevents overlap and double insertions
        } else {
            pos += 1;
        }
    }
    EditSet::new(edits)
}

/// Alphabet for injection paragraphs: large enough that short spans are
/// unique with overwhelming probability.
pub fn injection_alphabet() -> Vec<char> {
    ('\u{4e00}'..='\u{5100}').collect()
}

/// Offline stand-in for the error-map model: reads the requested error count
/// and family from the filled prompt, then fabricates localizable entries.
///
/// Linguistic anchors are picked from the front region of the paragraph and
/// the factual anchor from the tail, so the two request kinds never collide.
/// Entries corrupt the anchor by replacing its middle character with a
/// sentinel outside the text alphabet.
pub struct SyntheticErrorMapGateway;

const CORRUPTION_SENTINEL: char = 'Ｘ';

impl SyntheticErrorMapGateway {
    fn pick_anchor(
        text: &Paragraph,
        chars: &[char],
        from: usize,
        limit: usize,
        taken: &mut Vec<(usize, usize)>,
    ) -> Option<(usize, usize)> {
        let mut start = from;
        while start + 3 <= limit {
            let span = (start, start + 3);
            let anchor: String = chars[span.0..span.1].iter().collect();
            let unique = text.find_all(&anchor).len() == 1;
            let free = !taken.iter().any(|(s, e)| span.0 < *e && *s < span.1);
            if unique && free {
                taken.push(span);
                return Some(span);
            }
            start += 1;
        }
        None
    }

    fn entry(chars: &[char], span: (usize, usize), label: &str) -> serde_json::Value {
        let anchor: String = chars[span.0..span.1].iter().collect();
        let mut corrupted: Vec<char> = chars[span.0..span.1].to_vec();
        corrupted[1] = CORRUPTION_SENTINEL;
        let corrupted: String = corrupted.into_iter().collect();
        serde_json::json!({
            "original_text": anchor,
            "error_text": corrupted,
            "error_type": label,
            "position_context": "",
        })
    }
}

impl ChatGateway for SyntheticErrorMapGateway {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let text = request
            .messages
            .last()
            .map(|m| m.content.clone())
            .ok_or_else(|| ProviderError::Malformed("no user message".into()))?;
        let count = request
            .system
            .split("本次需要生成 ")
            .nth(1)
            .and_then(|rest| rest.split(' ').next())
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| ProviderError::Malformed("no error count in prompt".into()))?;
        let is_fact = request.system.contains("事实性错误");

        let paragraph = Paragraph::from(text.as_str());
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        let mut taken = Vec::new();
        let mut entries = Vec::new();
        if is_fact {
            let from = n.saturating_sub(8);
            if let Some(span) = Self::pick_anchor(&paragraph, &chars, from, n, &mut taken) {
                entries.push(Self::entry(&chars, span, "数量金额错误"));
            }
        } else {
            let labels = ["同音字词", "标点误用", "形近字词", "字词乱序"];
            let limit = n.saturating_sub(10);
            let mut cursor = 0usize;
            for i in 0..count {
                match Self::pick_anchor(&paragraph, &chars, cursor, limit, &mut taken) {
                    Some(span) => {
                        entries.push(Self::entry(&chars, span, labels[i % labels.len()]));
                        cursor = span.1 + 2;
                    }
                    None => break,
                }
            }
        }
        let payload = serde_json::json!({ "error_map": entries });
        Ok(ChatResponse {
            text: format!("```json\n{payload}\n```"),
            tool_calls: Vec::new(),
        })
    }
}
