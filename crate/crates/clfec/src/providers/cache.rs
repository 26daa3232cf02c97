//! Record/replay cache: one JSON payload per exchange, content-addressed by
//! the request key. With a frozen cache any pipeline run is bit-reproducible
//! and needs no network.

use super::{ChatGateway, ChatRequest, ChatResponse, ProviderError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    /// Misses fetch upstream and persist the payload.
    Record,
    /// Misses are errors; never touches the network.
    Replay,
}

impl std::str::FromStr for CacheMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "record" => Ok(CacheMode::Record),
            "replay" => Ok(CacheMode::Replay),
            other => Err(format!("unknown cache mode: {other:?}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Exchange {
    key: String,
    payload: serde_json::Value,
}

/// On-disk exchange cache. Writers are serialized per key, so concurrent
/// `get_or_fetch` calls on one key perform exactly one upstream fetch.
pub struct ExchangeCache {
    dir: PathBuf,
    mode: CacheMode,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ExchangeCache {
    pub fn new(dir: impl Into<PathBuf>, mode: CacheMode) -> Result<Self, ProviderError> {
        let dir = dir.into();
        if mode == CacheMode::Record {
            std::fs::create_dir_all(&dir)
                .map_err(|e| ProviderError::Storage(format!("create {}: {e}", dir.display())))?;
        }
        Ok(ExchangeCache { dir, mode, locks: Mutex::new(HashMap::new()) })
    }

    pub fn mode(&self) -> CacheMode {
        self.mode
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, key: &str) -> PathBuf {
        let digest = Sha256::digest(key.as_bytes());
        let mut name = String::with_capacity(64 + 5);
        for b in digest {
            name.push_str(&format!("{b:02x}"));
        }
        name.push_str(".json");
        self.dir.join(name)
    }

    fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        Arc::clone(locks.entry(key.to_owned()).or_default())
    }

    fn read(&self, key: &str, path: &Path) -> Result<Option<serde_json::Value>, ProviderError> {
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(ProviderError::Storage(format!("read {}: {e}", path.display()))),
        };
        let exchange: Exchange = serde_json::from_slice(&bytes)
            .map_err(|e| ProviderError::Storage(format!("decode {}: {e}", path.display())))?;
        if exchange.key != key {
            // hash collision or tampering: treat as absent
            return Ok(None);
        }
        Ok(Some(exchange.payload))
    }

    /// Returns the stored payload for `key`, or in record mode fetches,
    /// persists and returns it.
    pub fn get_or_fetch(
        &self,
        key: &str,
        fetch: impl FnOnce() -> Result<serde_json::Value, ProviderError>,
    ) -> Result<serde_json::Value, ProviderError> {
        let lock = self.key_lock(key);
        let _guard = lock.lock().expect("key lock poisoned");
        let path = self.path_for(key);
        if let Some(payload) = self.read(key, &path)? {
            return Ok(payload);
        }
        if self.mode == CacheMode::Replay {
            return Err(ProviderError::ReplayMiss(key.to_owned()));
        }
        let payload = fetch()?;
        let exchange = Exchange { key: key.to_owned(), payload: payload.clone() };
        let bytes = serde_json::to_vec(&exchange)
            .map_err(|e| ProviderError::Storage(format!("encode exchange: {e}")))?;
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, &bytes)
            .map_err(|e| ProviderError::Storage(format!("write {}: {e}", tmp.display())))?;
        std::fs::rename(&tmp, &path)
            .map_err(|e| ProviderError::Storage(format!("rename {}: {e}", path.display())))?;
        Ok(payload)
    }
}

/// Gateway wrapper routing every chat exchange through an [`ExchangeCache`].
/// In replay mode no inner gateway is needed.
pub struct CachedGateway {
    inner: Option<Arc<dyn ChatGateway>>,
    cache: Arc<ExchangeCache>,
}

impl CachedGateway {
    pub fn recording(inner: Arc<dyn ChatGateway>, cache: Arc<ExchangeCache>) -> Self {
        CachedGateway { inner: Some(inner), cache }
    }

    pub fn replay(cache: Arc<ExchangeCache>) -> Self {
        CachedGateway { inner: None, cache }
    }

    fn key(request: &ChatRequest) -> String {
        format!("chat:{}", request.cache_key_material())
    }
}

impl ChatGateway for CachedGateway {
    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, ProviderError> {
        let payload = self.cache.get_or_fetch(&Self::key(request), || {
            let inner = self
                .inner
                .as_ref()
                .ok_or_else(|| ProviderError::ReplayMiss("no upstream gateway".into()))?;
            let response = inner.chat(request)?;
            serde_json::to_value(&response)
                .map_err(|e| ProviderError::Storage(format!("encode response: {e}")))
        })?;
        serde_json::from_value(payload)
            .map_err(|e| ProviderError::Storage(format!("decode cached response: {e}")))
    }
}
