//! Prompt templates, shipped as UTF-8 asset files and keyed by method and
//! stage. Templates use `{name}` placeholders with `{{`/`}}` escaping for
//! literal braces (the JSON schema blocks), so [`fill_template`] must run on
//! every template before it is sent, even when no variables are bound.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSet {
    /// Stage-1 linguistic-only proofreading (sequential pipeline).
    pub lec_only: String,
    /// Stage-2 factual-only proofreading (sequential pipeline).
    pub fec_only: String,
    /// Joint proofreading prompt; takes `{current_time}`.
    pub unified: String,
    /// Search-query extraction; outputs a bare JSON object.
    pub query_extraction: String,
    /// Agent system prompt; takes `{current_time}`.
    pub agent: String,
    /// Word/punctuation error injection; takes `{num_errors}`, `{error_types}`.
    pub inject_word_punct: String,
    /// Factual error injection; takes `{num_errors}`, `{error_types}`.
    pub inject_fact: String,
}

impl PromptSet {
    /// The templates shipped with the crate.
    pub fn builtin() -> Self {
        PromptSet {
            lec_only: include_str!("../assets/prompts/lec_only.txt").to_owned(),
            fec_only: include_str!("../assets/prompts/fec_only.txt").to_owned(),
            unified: include_str!("../assets/prompts/unified.txt").to_owned(),
            query_extraction: include_str!("../assets/prompts/query_extraction.txt").to_owned(),
            agent: include_str!("../assets/prompts/agent.txt").to_owned(),
            inject_word_punct: include_str!("../assets/prompts/inject_word_punct.txt").to_owned(),
            inject_fact: include_str!("../assets/prompts/inject_fact.txt").to_owned(),
        }
    }

    /// Loads overrides from a directory holding the same seven file names as
    /// `assets/prompts/`.
    pub fn from_dir(dir: impl AsRef<Path>) -> std::io::Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| std::fs::read_to_string(dir.join(name));
        Ok(PromptSet {
            lec_only: read("lec_only.txt")?,
            fec_only: read("fec_only.txt")?,
            unified: read("unified.txt")?,
            query_extraction: read("query_extraction.txt")?,
            agent: read("agent.txt")?,
            inject_word_punct: read("inject_word_punct.txt")?,
            inject_fact: read("inject_fact.txt")?,
        })
    }

    /// SHA-256 of each template, for run manifests.
    pub fn hashes(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        for (name, text) in [
            ("lec_only", &self.lec_only),
            ("fec_only", &self.fec_only),
            ("unified", &self.unified),
            ("query_extraction", &self.query_extraction),
            ("agent", &self.agent),
            ("inject_word_punct", &self.inject_word_punct),
            ("inject_fact", &self.inject_fact),
        ] {
            let digest = Sha256::digest(text.as_bytes());
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            map.insert(name.to_owned(), hex);
        }
        map
    }
}

/// Fills `{name}` placeholders and unescapes `{{` / `}}`. Unknown `{...}`
/// sequences pass through verbatim, so JSON snippets with single braces
/// survive untouched.
pub fn fill_template(template: &str, vars: &[(&str, &str)]) -> String {
    let chars: Vec<char> = template.chars().collect();
    let mut out = String::with_capacity(template.len());
    let mut i = 0usize;
    while i < chars.len() {
        match chars[i] {
            '{' if chars.get(i + 1) == Some(&'{') => {
                out.push('{');
                i += 2;
            }
            '}' if chars.get(i + 1) == Some(&'}') => {
                out.push('}');
                i += 2;
            }
            '{' => {
                let close = chars[i + 1..].iter().position(|&c| c == '}' || c == '{');
                let replaced = close.and_then(|off| {
                    if chars[i + 1 + off] != '}' {
                        return None;
                    }
                    let name: String = chars[i + 1..i + 1 + off].iter().collect();
                    vars.iter().find(|(k, _)| *k == name).map(|(_, v)| (off, *v))
                });
                match replaced {
                    Some((off, value)) => {
                        out.push_str(value);
                        i += off + 2;
                    }
                    None => {
                        out.push('{');
                        i += 1;
                    }
                }
            }
            c => {
                out.push(c);
                i += 1;
            }
        }
    }
    out
}
