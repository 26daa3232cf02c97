//! Search provider abstraction, evidence shaping and the cached searcher.

use super::bm25::{bm25_rerank, DEFAULT_B, DEFAULT_K1};
use super::cache::ExchangeCache;
use super::ProviderError;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// One raw result as returned by a search backend, before rerank/shaping.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawSearchResult {
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub link: String,
    /// ISO-8601 when the backend provides one, otherwise verbatim.
    #[serde(default)]
    pub timestamp: String,
    #[serde(default)]
    pub snippet: String,
}

/// A shaped evidence item: at most 3 per query, snippet ≤ 512 code points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceItem {
    pub title: String,
    pub link: String,
    pub timestamp: String,
    pub snippet: String,
}

/// Backend adapter fetching raw candidates for a query.
pub trait SearchProvider: Send + Sync {
    /// Stable identifier; part of the cache key.
    fn id(&self) -> &str;
    fn fetch(&self, query: &str) -> Result<Vec<RawSearchResult>, ProviderError>;
}

impl<T: SearchProvider + ?Sized> SearchProvider for Arc<T> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn fetch(&self, query: &str) -> Result<Vec<RawSearchResult>, ProviderError> {
        (**self).fetch(query)
    }
}

/// Search client combining a provider, the record/replay cache and BM25
/// rerank. Raw fetches are cached keyed by `(provider id, query)`, so rerank
/// parameter changes do not invalidate recorded exchanges.
pub struct Searcher {
    provider: Option<Arc<dyn SearchProvider>>,
    provider_id: String,
    cache: Option<Arc<ExchangeCache>>,
    k1: f64,
    b: f64,
}

impl Searcher {
    /// Live searcher without caching.
    pub fn live(provider: Arc<dyn SearchProvider>) -> Self {
        let provider_id = provider.id().to_owned();
        Searcher { provider: Some(provider), provider_id, cache: None, k1: DEFAULT_K1, b: DEFAULT_B }
    }

    /// Live searcher recording (or replaying) through `cache`.
    pub fn cached(provider: Arc<dyn SearchProvider>, cache: Arc<ExchangeCache>) -> Self {
        let provider_id = provider.id().to_owned();
        Searcher {
            provider: Some(provider),
            provider_id,
            cache: Some(cache),
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }

    /// Replay-only searcher; every query must be present in the cache.
    pub fn replay(provider_id: impl Into<String>, cache: Arc<ExchangeCache>) -> Self {
        Searcher {
            provider: None,
            provider_id: provider_id.into(),
            cache: Some(cache),
            k1: DEFAULT_K1,
            b: DEFAULT_B,
        }
    }

    pub fn with_params(mut self, k1: f64, b: f64) -> Self {
        self.k1 = k1;
        self.b = b;
        self
    }

    fn fetch_raw(&self, query: &str) -> Result<Vec<RawSearchResult>, ProviderError> {
        match &self.cache {
            Some(cache) => {
                let key = format!("search:{}:{}", self.provider_id, query);
                let payload = cache.get_or_fetch(&key, || {
                    let provider = self.provider.as_ref().ok_or_else(|| {
                        ProviderError::ReplayMiss("no upstream search provider".into())
                    })?;
                    let raw = provider.fetch(query)?;
                    serde_json::to_value(&raw)
                        .map_err(|e| ProviderError::Storage(format!("encode results: {e}")))
                })?;
                serde_json::from_value(payload)
                    .map_err(|e| ProviderError::Storage(format!("decode cached results: {e}")))
            }
            None => self
                .provider
                .as_ref()
                .ok_or_else(|| ProviderError::Transport("searcher has no provider".into()))?
                .fetch(query),
        }
    }

    /// Provider fetch → BM25 rerank → shaped evidence.
    pub fn search(&self, query: &str) -> Result<Vec<EvidenceItem>, ProviderError> {
        let raw = self.fetch_raw(query)?;
        Ok(bm25_rerank(query, &raw, self.k1, self.b))
    }
}

/// Provider used when no search backend is configured: every query returns
/// no candidates, so pipelines degrade to evidence-free prompts.
pub struct EmptySearchProvider {
    id: String,
}

impl EmptySearchProvider {
    pub fn new(id: impl Into<String>) -> Self {
        EmptySearchProvider { id: id.into() }
    }
}

impl SearchProvider for EmptySearchProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&self, _query: &str) -> Result<Vec<RawSearchResult>, ProviderError> {
        Ok(Vec::new())
    }
}

/// Minimal generic HTTP adapter: issues a GET with the query as a URL
/// parameter and expects either a JSON array of results or an object with a
/// `results` array, items shaped like [`RawSearchResult`]. Field mapping for
/// proprietary backends belongs in their own adapters.
pub struct HttpSearchProvider {
    id: String,
    endpoint: String,
    query_param: String,
    api_key_env: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpSearchProvider {
    pub fn new(
        id: impl Into<String>,
        endpoint: impl Into<String>,
        query_param: impl Into<String>,
        api_key_env: Option<String>,
    ) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(30))
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        Ok(HttpSearchProvider {
            id: id.into(),
            endpoint: endpoint.into(),
            query_param: query_param.into(),
            api_key_env,
            client,
        })
    }
}

impl SearchProvider for HttpSearchProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn fetch(&self, query: &str) -> Result<Vec<RawSearchResult>, ProviderError> {
        let mut req = self.client.get(&self.endpoint).query(&[(self.query_param.as_str(), query)]);
        if let Some(env_name) = &self.api_key_env {
            let key = std::env::var(env_name).map_err(|_| {
                ProviderError::AuthFailure(format!("environment variable {env_name} is not set"))
            })?;
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout(e.to_string())
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        if status.as_u16() == 429 {
            return Err(ProviderError::Quota("search quota exhausted".into()));
        }
        if !status.is_success() {
            return Err(ProviderError::Transport(format!("search returned {status}")));
        }
        let value: serde_json::Value =
            resp.json().map_err(|e| ProviderError::Malformed(e.to_string()))?;
        let items = value
            .as_array()
            .cloned()
            .or_else(|| value.get("results").and_then(|r| r.as_array().cloned()))
            .ok_or_else(|| ProviderError::Malformed("expected array or {results: []}".into()))?;
        items
            .into_iter()
            .map(|v| {
                serde_json::from_value(v).map_err(|e| ProviderError::Malformed(e.to_string()))
            })
            .collect()
    }
}
