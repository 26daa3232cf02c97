//! Scripted providers for tests, examples and offline replay fixtures.

use super::search::{RawSearchResult, SearchProvider};
use super::{ChatGateway, ChatRequest, ChatResponse, ProviderError, RawToolCall};
use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

pub fn text_response(text: impl Into<String>) -> ChatResponse {
    ChatResponse { text: text.into(), tool_calls: Vec::new() }
}

pub fn tool_call_response(name: &str, arguments: serde_json::Value) -> ChatResponse {
    ChatResponse {
        text: String::new(),
        tool_calls: vec![RawToolCall {
            id: None,
            name: name.to_owned(),
            arguments: arguments.to_string(),
        }],
    }
}

enum Script {
    /// Responses consumed in call order.
    Sequence(VecDeque<Result<ChatResponse, ProviderError>>),
    /// Responses matched by a needle against the request text; order-independent,
    /// so they stay deterministic under concurrent callers.
    Keyed(Vec<(String, Result<ChatResponse, ProviderError>)>),
}

/// Chat gateway answering from a script; records every request it saw.
pub struct ScriptedGateway {
    script: Mutex<Script>,
    requests: Mutex<Vec<ChatRequest>>,
}

impl ScriptedGateway {
    pub fn sequence(responses: impl IntoIterator<Item = ChatResponse>) -> Self {
        ScriptedGateway::sequence_results(responses.into_iter().map(Ok))
    }

    pub fn sequence_results(
        responses: impl IntoIterator<Item = Result<ChatResponse, ProviderError>>,
    ) -> Self {
        ScriptedGateway {
            script: Mutex::new(Script::Sequence(responses.into_iter().collect())),
            requests: Mutex::new(Vec::new()),
        }
    }

    /// The first pair whose needle occurs in the request's system prompt or
    /// any message wins.
    pub fn keyed<K: Into<String>>(pairs: impl IntoIterator<Item = (K, ChatResponse)>) -> Self {
        ScriptedGateway {
            script: Mutex::new(Script::Keyed(
                pairs.into_iter().map(|(k, v)| (k.into(), Ok(v))).collect(),
            )),
            requests: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.requests.lock().expect("requests poisoned").len()
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().expect("requests poisoned").clone()
    }
}

impl ChatGateway for ScriptedGateway {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        self.requests.lock().expect("requests poisoned").push(request.clone());
        let mut script = self.script.lock().expect("script poisoned");
        match &mut *script {
            Script::Sequence(queue) => queue
                .pop_front()
                .unwrap_or_else(|| Err(ProviderError::Transport("script exhausted".into()))),
            Script::Keyed(pairs) => {
                let haystack = std::iter::once(request.system.as_str())
                    .chain(request.messages.iter().map(|m| m.content.as_str()))
                    .collect::<Vec<_>>()
                    .join("\n");
                pairs
                    .iter()
                    .find(|(needle, _)| haystack.contains(needle))
                    .map(|(_, response)| response.clone())
                    .unwrap_or_else(|| {
                        Err(ProviderError::Transport("no scripted response matches".into()))
                    })
            }
        }
    }
}

/// Search provider answering from a query → results map; unknown queries
/// return no results, queries registered as failing return a transport error.
pub struct ScriptedSearch {
    results: HashMap<String, Vec<RawSearchResult>>,
    failures: Vec<String>,
    queries: Mutex<Vec<String>>,
}

impl ScriptedSearch {
    pub fn new<K: Into<String>>(
        entries: impl IntoIterator<Item = (K, Vec<RawSearchResult>)>,
    ) -> Self {
        ScriptedSearch {
            results: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
            failures: Vec::new(),
            queries: Mutex::new(Vec::new()),
        }
    }

    pub fn failing_on(mut self, query: impl Into<String>) -> Self {
        self.failures.push(query.into());
        self
    }

    pub fn queries(&self) -> Vec<String> {
        self.queries.lock().expect("queries poisoned").clone()
    }
}

impl SearchProvider for ScriptedSearch {
    fn id(&self) -> &str {
        "scripted"
    }

    fn fetch(&self, query: &str) -> Result<Vec<RawSearchResult>, ProviderError> {
        self.queries.lock().expect("queries poisoned").push(query.to_owned());
        if self.failures.iter().any(|q| q == query) {
            return Err(ProviderError::Transport(format!("scripted failure for {query:?}")));
        }
        Ok(self.results.get(query).cloned().unwrap_or_default())
    }
}
