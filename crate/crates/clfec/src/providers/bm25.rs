//! Okapi BM25 rerank for raw search results.

use super::search::{EvidenceItem, RawSearchResult};

/// At most this many evidence items survive a rerank.
pub const EVIDENCE_TOP_K: usize = 3;
/// Snippets are truncated to this many code points.
pub const SNIPPET_MAX_CHARS: usize = 512;
pub const DEFAULT_K1: f64 = 1.2;
pub const DEFAULT_B: f64 = 0.75;

/// Retrieval tokens: overlapping character bigrams of CJK runs plus
/// whitespace-split ASCII-ish tokens (lowercased, punctuation trimmed).
/// Bigrams avoid a segmenter dependency for scoring.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cjk_run: Vec<char> = Vec::new();
    let mut other_run = String::new();
    let flush_cjk = |run: &mut Vec<char>, tokens: &mut Vec<String>| {
        match run.len() {
            0 => {}
            1 => tokens.push(run[0].to_string()),
            _ => {
                for pair in run.windows(2) {
                    tokens.push(pair.iter().collect());
                }
            }
        }
        run.clear();
    };
    let flush_other = |run: &mut String, tokens: &mut Vec<String>| {
        for word in run.split_whitespace() {
            let trimmed = word.trim_matches(|c: char| !c.is_alphanumeric());
            if !trimmed.is_empty() {
                tokens.push(trimmed.to_lowercase());
            }
        }
        run.clear();
    };
    for c in text.chars() {
        if is_cjk(c) {
            flush_other(&mut other_run, &mut tokens);
            cjk_run.push(c);
        } else {
            flush_cjk(&mut cjk_run, &mut tokens);
            other_run.push(c);
        }
    }
    flush_cjk(&mut cjk_run, &mut tokens);
    flush_other(&mut other_run, &mut tokens);
    tokens
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4e00..=0x9fff      // CJK Unified Ideographs
        | 0x3400..=0x4dbf    // Extension A
        | 0xf900..=0xfaff    // Compatibility Ideographs
        | 0x20000..=0x2a6df  // Extension B
    )
}

/// Okapi BM25 score of one document against the (deduplicated) query terms.
///
/// `idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))`, and the term contribution
/// is `idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))`.
fn bm25_score(
    query_terms: &[String],
    doc: &[String],
    doc_count: usize,
    avgdl: f64,
    df: impl Fn(&str) -> usize,
    k1: f64,
    b: f64,
) -> f64 {
    let dl = doc.len() as f64;
    let mut score = 0.0;
    for term in query_terms {
        let tf = doc.iter().filter(|t| *t == term).count() as f64;
        if tf == 0.0 {
            continue;
        }
        let df = df(term) as f64;
        let idf = (1.0 + (doc_count as f64 - df + 0.5) / (df + 0.5)).ln();
        let denom = tf + k1 * (1.0 - b + b * dl / avgdl.max(f64::MIN_POSITIVE));
        score += idf * tf * (k1 + 1.0) / denom;
    }
    score
}

/// Reranks candidates against the query and shapes the evidence: top-3 by
/// BM25 score over snippet+title, ties broken by provider order, snippets
/// truncated to 512 code points.
pub fn bm25_rerank(
    query: &str,
    candidates: &[RawSearchResult],
    k1: f64,
    b: f64,
) -> Vec<EvidenceItem> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let mut query_terms = tokenize(query);
    query_terms.sort();
    query_terms.dedup();

    let docs: Vec<Vec<String>> = candidates
        .iter()
        .map(|c| tokenize(&format!("{} {}", c.snippet, c.title)))
        .collect();
    let avgdl = docs.iter().map(|d| d.len()).sum::<usize>() as f64 / docs.len() as f64;
    let df = |term: &str| docs.iter().filter(|d| d.iter().any(|t| t == term)).count();

    let mut order: Vec<(usize, f64)> = docs
        .iter()
        .enumerate()
        .map(|(i, doc)| (i, bm25_score(&query_terms, doc, docs.len(), avgdl, df, k1, b)))
        .collect();
    order.sort_by(|(ia, sa), (ib, sb)| {
        sb.partial_cmp(sa).unwrap_or(std::cmp::Ordering::Equal).then(ia.cmp(ib))
    });

    order
        .into_iter()
        .take(EVIDENCE_TOP_K)
        .map(|(i, _)| shape_evidence(&candidates[i]))
        .collect()
}

/// Applies the evidence shaping invariants to one raw result.
pub fn shape_evidence(raw: &RawSearchResult) -> EvidenceItem {
    EvidenceItem {
        title: raw.title.clone(),
        link: raw.link.clone(),
        timestamp: raw.timestamp.clone(),
        snippet: truncate_chars(&raw.snippet, SNIPPET_MAX_CHARS),
    }
}

fn truncate_chars(s: &str, max: usize) -> String {
    s.chars().take(max).collect()
}
