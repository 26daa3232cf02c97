//! Clients for external capabilities: a chat-completion gateway, a web-search
//! client with BM25 rerank and evidence shaping, and a record/replay cache
//! that makes every experiment deterministic and runnable offline.

pub mod bm25;
pub mod cache;
pub mod corrections;
pub mod http;
pub mod scripted;
pub mod search;

pub use bm25::{bm25_rerank, DEFAULT_B, DEFAULT_K1, EVIDENCE_TOP_K, SNIPPET_MAX_CHARS};
pub use cache::{CacheMode, CachedGateway, ExchangeCache};
pub use corrections::{parse_corrections, parse_queries, Correction, ParseError};
pub use http::{HttpChatGateway, HttpGatewayConfig};
pub use scripted::{text_response, tool_call_response, ScriptedGateway, ScriptedSearch};
pub use search::{
    EmptySearchProvider, EvidenceItem, HttpSearchProvider, RawSearchResult, SearchProvider,
    Searcher,
};

use serde::{Deserialize, Serialize};
use std::sync::{Condvar, Mutex};
use std::time::Duration;
use thiserror::Error;

/// Role of one chat message; the system prompt travels separately on the
/// request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
    /// Structured tool invocations attached to an assistant message.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<RawToolCall>,
    /// Id of the tool call a `Tool` message answers, when the dialect uses ids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::User, content: content.into(), tool_calls: Vec::new(), tool_call_id: None }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: Role::Assistant, content: content.into(), tool_calls: Vec::new(), tool_call_id: None }
    }

    pub fn tool(content: impl Into<String>, tool_call_id: Option<String>) -> Self {
        ChatMessage { role: Role::Tool, content: content.into(), tool_calls: Vec::new(), tool_call_id }
    }
}

/// One tool invocation as emitted by the model; `arguments` is kept as the
/// raw JSON string so malformed payloads can be fed back as observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawToolCall {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub name: String,
    pub arguments: String,
}

pub const DEFAULT_TEMPERATURE: f64 = 0.01;

/// A chat-completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub system: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    /// Dialect-specific tool schemas, when the request offers tools.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tools: Option<serde_json::Value>,
}

impl ChatRequest {
    pub fn new(model: impl Into<String>, system: impl Into<String>) -> Self {
        ChatRequest {
            model: model.into(),
            system: system.into(),
            messages: Vec::new(),
            temperature: DEFAULT_TEMPERATURE,
            tools: None,
        }
    }

    pub fn with_user(mut self, content: impl Into<String>) -> Self {
        self.messages.push(ChatMessage::user(content));
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    /// Canonical form hashed into cache keys; covers prompts, messages,
    /// temperature and model id, so editing any of them invalidates replays.
    pub fn cache_key_material(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tool_calls: Vec<RawToolCall>,
}

/// Failures surfaced by providers and the replay layer.
#[derive(Debug, Clone, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    AuthFailure(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("request timed out: {0}")]
    Timeout(String),
    #[error("provider quota exhausted: {0}")]
    Quota(String),
    #[error("replay cache miss: {0}")]
    ReplayMiss(String),
    #[error("cache storage failure: {0}")]
    Storage(String),
    #[error("malformed provider payload: {0}")]
    Malformed(String),
}

impl ProviderError {
    /// Transient errors are worth retrying; the rest fail fast.
    pub fn is_transient(&self) -> bool {
        matches!(
            self,
            ProviderError::Transport(_) | ProviderError::RateLimited(_) | ProviderError::Timeout(_)
        )
    }
}

/// Chat-completion client; implementations must tolerate concurrent calls.
pub trait ChatGateway: Send + Sync {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError>;
}

impl<T: ChatGateway + ?Sized> ChatGateway for std::sync::Arc<T> {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        (**self).chat(request)
    }
}

/// Runs `attempt` with bounded retries and exponential backoff on transient
/// failures. `budget` is the total number of attempts.
pub fn with_retries<T>(
    budget: usize,
    base_delay: Duration,
    mut attempt: impl FnMut(usize) -> Result<T, ProviderError>,
) -> Result<T, ProviderError> {
    assert!(budget >= 1, "retry budget must allow at least one attempt");
    let mut delay = base_delay;
    let mut last = None;
    for n in 1..=budget {
        match attempt(n) {
            Ok(v) => return Ok(v),
            Err(e) if e.is_transient() && n < budget => {
                std::thread::sleep(delay);
                delay = delay.saturating_mul(2);
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt ran"))
}

/// Counting semaphore bounding global request parallelism.
pub struct Limiter {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Limiter {
    pub fn new(max_parallel: usize) -> Self {
        assert!(max_parallel >= 1);
        Limiter { permits: Mutex::new(max_parallel), available: Condvar::new() }
    }

    pub fn acquire(&self) -> LimiterGuard<'_> {
        let mut permits = self.permits.lock().expect("limiter poisoned");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("limiter poisoned");
        }
        *permits -= 1;
        LimiterGuard { limiter: self }
    }
}

pub struct LimiterGuard<'a> {
    limiter: &'a Limiter,
}

impl Drop for LimiterGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.limiter.permits.lock().expect("limiter poisoned");
        *permits += 1;
        self.limiter.available.notify_one();
    }
}
