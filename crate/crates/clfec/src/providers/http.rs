//! HTTP chat gateway speaking the OpenAI-style chat-completion JSON dialect.
//! Any endpoint exposing that wire format binds through [`HttpGatewayConfig`];
//! other dialects implement [`ChatGateway`] directly.

use super::{
    with_retries, ChatGateway, ChatRequest, ChatResponse, Limiter, ProviderError, RawToolCall,
    Role,
};
use std::sync::Arc;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct HttpGatewayConfig {
    /// Full chat-completions URL.
    pub endpoint: String,
    /// Name of the environment variable holding the API key; keys never live
    /// in config files.
    pub api_key_env: String,
    /// Total attempts per request (transient failures only).
    pub retry_budget: usize,
    pub base_delay: Duration,
    pub timeout: Duration,
}

impl Default for HttpGatewayConfig {
    fn default() -> Self {
        HttpGatewayConfig {
            endpoint: String::new(),
            api_key_env: "CLFEC_API_KEY".to_owned(),
            retry_budget: 3,
            base_delay: Duration::from_millis(200),
            timeout: Duration::from_secs(120),
        }
    }
}

pub struct HttpChatGateway {
    config: HttpGatewayConfig,
    limiter: Option<Arc<Limiter>>,
    client: reqwest::blocking::Client,
}

impl HttpChatGateway {
    pub fn new(config: HttpGatewayConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpChatGateway { config, limiter: None, client })
    }

    pub fn with_limiter(mut self, limiter: Arc<Limiter>) -> Self {
        self.limiter = Some(limiter);
        self
    }

    fn api_key(&self) -> Result<String, ProviderError> {
        std::env::var(&self.config.api_key_env).map_err(|_| {
            ProviderError::AuthFailure(format!(
                "environment variable {} is not set",
                self.config.api_key_env
            ))
        })
    }

    fn attempt(&self, request: &ChatRequest, key: &str) -> Result<ChatResponse, ProviderError> {
        let _permit = self.limiter.as_ref().map(|l| l.acquire());
        let body = build_wire_body(request);
        let resp = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    ProviderError::Timeout(e.to_string())
                } else {
                    ProviderError::Transport(e.to_string())
                }
            })?;
        let status = resp.status();
        match status.as_u16() {
            200..=299 => {}
            401 | 403 => return Err(ProviderError::AuthFailure(format!("status {status}"))),
            429 => return Err(ProviderError::RateLimited(format!("status {status}"))),
            500..=599 => return Err(ProviderError::Transport(format!("status {status}"))),
            _ => return Err(ProviderError::Malformed(format!("unexpected status {status}"))),
        }
        let value: serde_json::Value =
            resp.json().map_err(|e| ProviderError::Malformed(e.to_string()))?;
        parse_wire_response(&value)
    }
}

impl ChatGateway for HttpChatGateway {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let key = self.api_key()?;
        with_retries(self.config.retry_budget, self.config.base_delay, |_| {
            self.attempt(request, &key)
        })
    }
}

/// Maps the internal request onto the chat-completions wire body.
pub(crate) fn build_wire_body(request: &ChatRequest) -> serde_json::Value {
    let mut messages = Vec::with_capacity(request.messages.len() + 1);
    messages.push(serde_json::json!({"role": "system", "content": request.system}));
    for m in &request.messages {
        let role = match m.role {
            Role::User => "user",
            Role::Assistant => "assistant",
            Role::Tool => "tool",
        };
        let mut msg = serde_json::json!({"role": role, "content": m.content});
        if !m.tool_calls.is_empty() {
            msg["tool_calls"] = m
                .tool_calls
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    serde_json::json!({
                        "id": c.id.clone().unwrap_or_else(|| format!("call_{i}")),
                        "type": "function",
                        "function": {"name": c.name, "arguments": c.arguments},
                    })
                })
                .collect::<Vec<_>>()
                .into();
        }
        if let Some(id) = &m.tool_call_id {
            msg["tool_call_id"] = serde_json::json!(id);
        }
        messages.push(msg);
    }
    let mut body = serde_json::json!({
        "model": request.model,
        "messages": messages,
        "temperature": request.temperature,
    });
    if let Some(tools) = &request.tools {
        body["tools"] = tools.clone();
    }
    body
}

/// Extracts text and tool calls from a chat-completions response body.
pub(crate) fn parse_wire_response(value: &serde_json::Value) -> Result<ChatResponse, ProviderError> {
    let message = value
        .get("choices")
        .and_then(|c| c.get(0))
        .and_then(|c| c.get("message"))
        .ok_or_else(|| ProviderError::Malformed("missing choices[0].message".into()))?;
    let text = message.get("content").and_then(|c| c.as_str()).unwrap_or("").to_owned();
    let tool_calls = message
        .get("tool_calls")
        .and_then(|t| t.as_array())
        .map(|calls| {
            calls
                .iter()
                .filter_map(|c| {
                    let function = c.get("function")?;
                    Some(RawToolCall {
                        id: c.get("id").and_then(|i| i.as_str()).map(str::to_owned),
                        name: function.get("name")?.as_str()?.to_owned(),
                        arguments: function
                            .get("arguments")
                            .and_then(|a| a.as_str())
                            .unwrap_or("{}")
                            .to_owned(),
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    Ok(ChatResponse { text, tool_calls })
}
