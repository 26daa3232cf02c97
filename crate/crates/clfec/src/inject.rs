//! Seeded construction of corrupted paragraphs with gold edit sets.
//!
//! A plan fixes how many linguistic errors to inject (one per 150 characters,
//! minimum one) and whether to add a single factual error. A model gateway
//! turns the plan into a span-level error map; anchors are localized in the
//! clean source, applied as corruptions, and inverted into gold edits
//! anchored in the corrupted text, so `apply_edits(corrupted, gold)` always
//! reproduces the clean source.

use crate::edit::{apply_edits, validate_edits, EditOperation, EditSet, ErrorType, Paragraph};
use crate::prompts::{fill_template, PromptSet};
use crate::providers::{ChatGateway, ChatRequest, ParseError, ProviderError, DEFAULT_TEMPERATURE};
use crate::Split;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::BufRead;
use std::path::Path;
use thiserror::Error;

/// Word/punctuation corruption subtypes with their default sampling weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subtype {
    Homophonic,
    ShapeSimilar,
    NearPhonetic,
    Redundancy,
    Omission,
    Permutation,
    PunctMisuse,
    PunctRedundancy,
    PunctOmission,
    ContextMismatch,
}

impl Subtype {
    pub const ALL: [Subtype; 10] = [
        Subtype::Homophonic,
        Subtype::ShapeSimilar,
        Subtype::NearPhonetic,
        Subtype::Redundancy,
        Subtype::Omission,
        Subtype::Permutation,
        Subtype::PunctMisuse,
        Subtype::PunctRedundancy,
        Subtype::PunctOmission,
        Subtype::ContextMismatch,
    ];

    /// Label used in injection prompts and error maps.
    pub fn label(self) -> &'static str {
        match self {
            Subtype::Homophonic => "同音字词",
            Subtype::ShapeSimilar => "形近字词",
            Subtype::NearPhonetic => "近音字词",
            Subtype::Redundancy => "字词冗余",
            Subtype::Omission => "字词缺失",
            Subtype::Permutation => "字词乱序",
            Subtype::PunctMisuse => "标点误用",
            Subtype::PunctRedundancy => "标点冗余",
            Subtype::PunctOmission => "标点缺失",
            Subtype::ContextMismatch => "上下文不对应",
        }
    }

    pub fn from_label(label: &str) -> Option<Subtype> {
        Subtype::ALL.into_iter().find(|s| s.label() == label)
    }

    /// Gold edit category this subtype corrects into.
    pub fn error_type(self) -> ErrorType {
        match self {
            Subtype::PunctMisuse | Subtype::PunctRedundancy | Subtype::PunctOmission => {
                ErrorType::Punctuation
            }
            _ => ErrorType::Word,
        }
    }
}

pub const GRAMMAR_LABEL: &str = "语法错误";

/// Sampling weights over the ten subtypes; must be non-negative and sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtypeWeights([f64; 10]);

impl SubtypeWeights {
    pub fn new(weights: [f64; 10]) -> Self {
        SubtypeWeights(weights)
    }

    pub fn get(&self, subtype: Subtype) -> f64 {
        self.0[Subtype::ALL.iter().position(|s| *s == subtype).expect("known subtype")]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Subtype, f64)> + '_ {
        Subtype::ALL.into_iter().zip(self.0.iter().copied())
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Checks the strict invariant: non-negative, summing to 1 within 1e-9.
    pub fn validate(&self) -> Result<(), InjectError> {
        if self.0.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(InjectError::InvalidWeights("negative or non-finite weight".into()));
        }
        if (self.sum() - 1.0).abs() > 1e-9 {
            return Err(InjectError::InvalidWeights(format!("weights sum to {}", self.sum())));
        }
        Ok(())
    }
}

impl Default for SubtypeWeights {
    fn default() -> Self {
        SubtypeWeights([0.15, 0.15, 0.10, 0.15, 0.15, 0.05, 0.10, 0.05, 0.05, 0.05])
    }
}

/// One entry of a model-produced error map: replace the unique anchor
/// `original_text` with `error_text`. `position_context` carries surrounding
/// text (context + anchor + context) for disambiguation when the anchor
/// occurs more than once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorMapEntry {
    pub original_text: String,
    pub error_text: String,
    pub error_type: String,
    #[serde(default)]
    pub position_context: String,
}

/// What to inject into one paragraph; deterministic in `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    pub linguistic_count: usize,
    pub subtypes: Vec<Subtype>,
    pub inject_fact: bool,
    pub seed: u64,
}

impl InjectionPlan {
    pub fn is_empty(&self) -> bool {
        self.linguistic_count == 0 && !self.inject_fact
    }
}

#[derive(Debug, Clone, Error)]
pub enum InjectError {
    #[error("invalid subtype weights: {0}")]
    InvalidWeights(String),
    #[error("anchor not found: {anchor:?}")]
    AnchorNotFound { anchor: String },
    #[error("anchor is ambiguous after context disambiguation: {anchor:?}")]
    AnchorAmbiguous { anchor: String },
    #[error("entry {index} is a no-op: original equals error text")]
    NoOpEntry { index: usize },
    #[error("entries {first} and {second} overlap")]
    OverlapConflict { first: usize, second: usize },
    #[error("malformed error map after {attempts} attempts: {detail}")]
    MalformedErrorMap { attempts: usize, detail: String },
    #[error("could not place {requested} errors after {attempts} attempts; produced {produced}")]
    InsufficientEntries { requested: usize, produced: usize, attempts: usize },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Round-half-up density rule: one linguistic error per 150 characters,
/// floor one.
pub fn linguistic_error_count(char_len: usize) -> usize {
    ((char_len as f64 / 150.0) + 0.5).floor().max(1.0) as usize
}

/// Derives a per-record seed from the master seed and the record id
/// (FNV-1a 64 over the id bytes folded into the master seed), so paragraphs
/// are reproducible independently of corpus order.
pub fn derive_record_seed(master: u64, id: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut hash = OFFSET;
    for b in master.to_le_bytes().into_iter().chain(id.bytes()) {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(PRIME);
    }
    hash
}

/// Plans an injection for one paragraph: LEC gets the density-rule count of
/// linguistic errors, FEC a single factual error, MIX both, ErrorFree nothing.
/// Subtypes are drawn from a ChaCha8 stream seeded with `seed`, a named
/// portable generator, so corpora are reproducible across platforms.
pub fn plan_injection(
    text: &Paragraph,
    split: Split,
    seed: u64,
    weights: &SubtypeWeights,
) -> Result<InjectionPlan, InjectError> {
    let (linguistic_count, inject_fact) = match split {
        Split::Lec => (linguistic_error_count(text.char_len()), false),
        Split::Fec => (0, true),
        Split::Mix => (linguistic_error_count(text.char_len()), true),
        Split::ErrorFree => (0, false),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subtypes = sample_subtypes(linguistic_count, weights, &mut rng)?;
    Ok(InjectionPlan { linguistic_count, subtypes, inject_fact, seed })
}

/// Independent categorical draws from the subtype distribution.
pub fn sample_subtypes(
    count: usize,
    weights: &SubtypeWeights,
    rng: &mut impl Rng,
) -> Result<Vec<Subtype>, InjectError> {
    if weights.0.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(InjectError::InvalidWeights("negative or non-finite weight".into()));
    }
    let total = weights.sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(InjectError::InvalidWeights(format!("weights sum to {total}")));
    }
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut r = rng.random::<f64>() * total;
        let mut chosen = *Subtype::ALL.last().expect("non-empty");
        for (subtype, w) in weights.iter() {
            if r < w {
                chosen = subtype;
                break;
            }
            r -= w;
        }
        out.push(chosen);
    }
    Ok(out)
}

/// Locates an entry's anchor in the clean source.
///
/// A unique anchor resolves directly. When the anchor occurs multiple times,
/// the `position_context` window (context + anchor + context) is searched as
/// one needle; a unique hit resolves to the anchor span inside that window.
pub fn localize(text: &Paragraph, entry: &ErrorMapEntry) -> Result<(usize, usize), InjectError> {
    let anchor = entry.original_text.as_str();
    if anchor.is_empty() {
        return Err(InjectError::AnchorNotFound { anchor: String::new() });
    }
    let occurrences = text.find_all(anchor);
    match occurrences.len() {
        0 => Err(InjectError::AnchorNotFound { anchor: anchor.to_owned() }),
        1 => Ok(occurrences[0]),
        _ => {
            let context = entry.position_context.as_str();
            if context.is_empty() || !context.contains(anchor) {
                return Err(InjectError::AnchorAmbiguous { anchor: anchor.to_owned() });
            }
            let offset = Paragraph::from(context)
                .find_all(anchor)
                .first()
                .map(|(s, _)| *s)
                .expect("context contains anchor");
            let anchor_len = anchor.chars().count();
            let mut candidates: Vec<(usize, usize)> = text
                .find_all(context)
                .into_iter()
                .map(|(ctx_start, _)| (ctx_start + offset, ctx_start + offset + anchor_len))
                .collect();
            candidates.dedup();
            match candidates.len() {
                1 => Ok(candidates[0]),
                _ => Err(InjectError::AnchorAmbiguous { anchor: anchor.to_owned() }),
            }
        }
    }
}

/// Maps an error-map label onto the gold edit category. Unknown labels are
/// treated as factual categories, which is what the per-domain factual
/// taxonomies produce.
pub fn map_entry_label(label: &str) -> ErrorType {
    if let Some(subtype) = Subtype::from_label(label) {
        return subtype.error_type();
    }
    match label {
        GRAMMAR_LABEL | "grammar" => ErrorType::Grammar,
        _ => ErrorType::Fact,
    }
}

/// Applies error-map entries to the clean source and returns the corrupted
/// paragraph together with the inverse gold edits anchored in it.
pub fn corrupt(
    text: &Paragraph,
    entries: &[ErrorMapEntry],
) -> Result<(Paragraph, EditSet), InjectError> {
    let mut located: Vec<(usize, (usize, usize), &ErrorMapEntry)> = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        if entry.original_text == entry.error_text {
            return Err(InjectError::NoOpEntry { index: i });
        }
        located.push((i, localize(text, entry)?, entry));
    }
    located.sort_by_key(|(_, span, _)| *span);
    for pair in located.windows(2) {
        let (first_idx, (_, first_end), _) = pair[0];
        let (second_idx, (second_start, _), _) = pair[1];
        if first_end > second_start {
            return Err(InjectError::OverlapConflict { first: first_idx, second: second_idx });
        }
    }

    let forward = EditSet::new(
        located
            .iter()
            .map(|(_, (start, end), entry)| {
                EditOperation::new(
                    *start,
                    *end,
                    entry.original_text.clone(),
                    entry.error_text.clone(),
                    map_entry_label(&entry.error_type),
                )
            })
            .collect(),
    );
    let corrupted = apply_edits(text, &forward).expect("localized spans are valid");

    // Inverse edits, re-anchored in the corrupted text.
    let mut delta = 0isize;
    let mut gold: Vec<EditOperation> = Vec::with_capacity(located.len());
    for (_, (start, end), entry) in &located {
        let error_len = entry.error_text.chars().count();
        let new_start = (*start as isize + delta) as usize;
        let edit = EditOperation::new(
            new_start,
            new_start + error_len,
            entry.error_text.clone(),
            entry.original_text.clone(),
            map_entry_label(&entry.error_type),
        );
        delta += error_len as isize - (*end - *start) as isize;
        // Adjacent whole-span deletions invert into insertions at the same
        // index; merge them to keep the gold set applicable.
        match gold.last_mut() {
            Some(last)
                if last.is_insertion() && edit.is_insertion() && last.start == edit.start =>
            {
                last.replacement.push_str(&edit.replacement);
            }
            _ => gold.push(edit),
        }
    }
    let gold = EditSet::new(gold);
    debug_assert!(validate_edits(&corrupted, &gold).is_empty());
    Ok((corrupted, gold))
}

/// Configuration for model-driven injection.
#[derive(Debug, Clone)]
pub struct InjectorConfig {
    pub weights: SubtypeWeights,
    /// Total gateway attempts per request kind, covering malformed payloads
    /// and localization deficits.
    pub max_attempts: usize,
    /// Factual category labels offered to the model; per-domain taxonomies
    /// are configuration, not code.
    pub fact_categories: Vec<String>,
    /// Extra grammar errors per paragraph, requested through the same
    /// error-map mechanism. Off by default: grammar corruptions are hard to
    /// control, so the reliable path is importing hand-written entries via
    /// [`load_error_map_jsonl`].
    pub grammar_errors: usize,
    pub model: String,
    pub temperature: f64,
}

impl Default for InjectorConfig {
    fn default() -> Self {
        InjectorConfig {
            weights: SubtypeWeights::default(),
            max_attempts: 3,
            fact_categories: [
                "股票代码错误",
                "数量金额错误",
                "时间日期错误",
                "百分比错误",
                "合同编号错误",
                "单位错误",
                "人物名称错误",
                "公司名称错误",
                "机构名称错误",
                "会议名称届次错误",
                "网址错误",
                "金融专业术语错误",
            ]
            .into_iter()
            .map(str::to_owned)
            .collect(),
            grammar_errors: 0,
            model: "default".to_owned(),
            temperature: DEFAULT_TEMPERATURE,
        }
    }
}

enum RequestKind {
    Linguistic,
    Fact,
}

impl RequestKind {
    fn accepts(&self, label: &str) -> bool {
        match self {
            RequestKind::Linguistic => !matches!(map_entry_label(label), ErrorType::Fact),
            RequestKind::Fact => map_entry_label(label) == ErrorType::Fact,
        }
    }
}

/// Asks the gateway for error-map entries satisfying `plan`.
///
/// Entries that cannot be localized, no-ops, entries of the wrong category
/// and entries overlapping already-accepted ones are dropped; the call is
/// retried with the deficit count until the request is filled or the attempt
/// budget runs out.
pub fn request_error_map(
    gateway: &dyn ChatGateway,
    prompts: &PromptSet,
    text: &Paragraph,
    plan: &InjectionPlan,
    config: &InjectorConfig,
) -> Result<Vec<ErrorMapEntry>, InjectError> {
    let mut accepted: Vec<((usize, usize), ErrorMapEntry)> = Vec::new();

    if plan.linguistic_count + config.grammar_errors > 0 {
        let mut labels: Vec<&str> = plan.subtypes.iter().map(|s| s.label()).collect();
        labels.extend(std::iter::repeat_n(GRAMMAR_LABEL, config.grammar_errors));
        fill_request(
            gateway,
            &prompts.inject_word_punct,
            text,
            labels.len(),
            &labels.join("、"),
            RequestKind::Linguistic,
            config,
            &mut accepted,
        )?;
    }
    if plan.inject_fact {
        let categories: Vec<&str> = config.fact_categories.iter().map(String::as_str).collect();
        fill_request(
            gateway,
            &prompts.inject_fact,
            text,
            1,
            &categories.join("、"),
            RequestKind::Fact,
            config,
            &mut accepted,
        )?;
    }

    accepted.sort_by_key(|(span, _)| *span);
    Ok(accepted.into_iter().map(|(_, entry)| entry).collect())
}

#[allow(clippy::too_many_arguments)]
fn fill_request(
    gateway: &dyn ChatGateway,
    template: &str,
    text: &Paragraph,
    requested: usize,
    error_types: &str,
    kind: RequestKind,
    config: &InjectorConfig,
    accepted: &mut Vec<((usize, usize), ErrorMapEntry)>,
) -> Result<(), InjectError> {
    let mut produced = 0usize;
    let mut attempts = 0usize;
    let mut last_malformed = String::new();
    let mut all_malformed = true;
    while produced < requested && attempts < config.max_attempts {
        attempts += 1;
        let deficit = requested - produced;
        let system = fill_template(
            template,
            &[("num_errors", deficit.to_string().as_str()), ("error_types", error_types)],
        );
        let request = ChatRequest::new(config.model.clone(), system)
            .with_user(text.as_str().to_owned())
            .with_temperature(config.temperature);
        let response = gateway.chat(&request)?;
        let entries = match parse_error_map(&response.text) {
            Ok(entries) => {
                all_malformed = false;
                entries
            }
            Err(e) => {
                last_malformed = e.to_string();
                continue;
            }
        };
        // Localize left to right; drop anything that conflicts.
        let mut batch: Vec<((usize, usize), ErrorMapEntry)> = entries
            .into_iter()
            .filter(|e| e.original_text != e.error_text && kind.accepts(&e.error_type))
            .filter_map(|e| localize(text, &e).ok().map(|span| (span, e)))
            .collect();
        batch.sort_by_key(|(span, _)| *span);
        for (span, entry) in batch {
            if produced == requested {
                break;
            }
            let overlaps = accepted
                .iter()
                .any(|((s, e), _)| span.0 < *e && *s < span.1 || (*s, *e) == span);
            if !overlaps {
                accepted.push((span, entry));
                produced += 1;
            }
        }
    }
    if produced < requested {
        if all_malformed {
            return Err(InjectError::MalformedErrorMap { attempts, detail: last_malformed });
        }
        return Err(InjectError::InsufficientEntries { requested, produced, attempts });
    }
    Ok(())
}

/// Parses the `{"error_map": [...]}` payload out of a raw model reply.
pub fn parse_error_map(raw: &str) -> Result<Vec<ErrorMapEntry>, ParseError> {
    let payload = crate::providers::corrections::extract_json_payload(raw)
        .ok_or(ParseError::NoParsablePayload)?;
    let list = payload
        .get("error_map")
        .ok_or_else(|| ParseError::SchemaMismatch("missing \"error_map\" key".into()))?
        .as_array()
        .ok_or_else(|| ParseError::SchemaMismatch("\"error_map\" is not an array".into()))?;
    list.iter()
        .enumerate()
        .map(|(i, item)| {
            serde_json::from_value(item.clone()).map_err(|e| {
                ParseError::SchemaMismatch(format!("error_map[{i}] does not fit the schema: {e}"))
            })
        })
        .collect()
}

/// Hand-annotation import: UTF-8 JSONL, one [`ErrorMapEntry`] per line,
/// `#`-prefixed lines ignored.
pub fn load_error_map_jsonl(path: impl AsRef<Path>) -> Result<Vec<ErrorMapEntry>, std::io::Error> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let entry: ErrorMapEntry = serde_json::from_str(trimmed).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1))
        })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Full per-paragraph injection: plan, request an error map, corrupt.
/// ErrorFree paragraphs pass through untouched with an empty gold set.
pub fn inject_paragraph(
    gateway: &dyn ChatGateway,
    prompts: &PromptSet,
    text: &Paragraph,
    split: Split,
    seed: u64,
    config: &InjectorConfig,
) -> Result<(Paragraph, EditSet), InjectError> {
    let plan = plan_injection(text, split, seed, &config.weights)?;
    if plan.is_empty() {
        return Ok((text.clone(), EditSet::empty()));
    }
    let entries = request_error_map(gateway, prompts, text, &plan, config)?;
    corrupt(text, &entries)
}
