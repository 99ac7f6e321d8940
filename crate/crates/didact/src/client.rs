//! Completion-endpoint client: greedy decoding over a JSON POST protocol,
//! bounded exponential-backoff retries, and a persistent content-addressed
//! response cache.
//!
//! Wire shape: request `{model, prompt, max_tokens, temperature, stop,
//! logprobs?}`, response `{text, token_scores?}`. Alternative endpoint
//! schemas plug in behind [`TextCompletion`] instead.
//!
//! Cache entries live as one JSON file per request digest; writes go
//! temp-then-rename so concurrent workers never observe partial files, and
//! identical in-flight requests collapse onto one network call.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::agents::{AgentError, Completion, CompletionRequest, TextCompletion, GREEDY_TEMPERATURE};
use crate::rng;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String, retriable: bool },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: String },
    #[error("cache i/o failed for {path}: {source}")]
    Cache {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
}

impl ClientError {
    fn retriable(&self) -> bool {
        match self {
            ClientError::Status { retriable, .. } => *retriable,
            ClientError::Transport(_) => true,
            _ => false,
        }
    }
}

/// Endpoint wiring: URL, model name, credentials, timeouts, cache location.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub url: String,
    pub model: String,
    /// Environment variable holding the bearer token, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    /// Base backoff; doubles per attempt.
    #[serde(default = "default_backoff_ms")]
    pub backoff_ms: u64,
}

fn default_timeout_secs() -> u64 {
    60
}

fn default_max_retries() -> u32 {
    3
}

fn default_backoff_ms() -> u64 {
    250
}

/// Content digest of everything that identifies a request to an endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey(String);

impl CacheKey {
    pub fn for_request(url: &str, model: &str, request: &CompletionRequest) -> CacheKey {
        let mut hasher = Sha256::new();
        for part in [url, model, &request.prompt, &request.max_tokens.to_string()] {
            hasher.update(part.as_bytes());
            hasher.update([0x1f]);
        }
        for stop in &request.stop {
            hasher.update(stop.as_bytes());
            hasher.update([0x1e]);
        }
        hasher.update([u8::from(request.want_scores)]);
        CacheKey(hex::encode(hasher.finalize()))
    }

    pub fn as_hex(&self) -> &str {
        &self.0
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
    stop: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    logprobs: Option<u32>,
}

#[derive(Deserialize)]
struct WireResponse {
    text: String,
    #[serde(default)]
    token_scores: Option<BTreeMap<String, f64>>,
}

struct Inflight {
    keys: Mutex<HashSet<String>>,
    done: Condvar,
}

impl Inflight {
    fn new() -> Self {
        Inflight { keys: Mutex::new(HashSet::new()), done: Condvar::new() }
    }

    fn claim(&self, key: &CacheKey) {
        let mut keys = self.keys.lock().unwrap();
        while keys.contains(key.as_hex()) {
            keys = self.done.wait(keys).unwrap();
        }
        keys.insert(key.as_hex().to_string());
    }

    fn release(&self, key: &CacheKey) {
        self.keys.lock().unwrap().remove(key.as_hex());
        self.done.notify_all();
    }
}

/// The HTTP-backed completion client.
pub struct HttpClient {
    config: EndpointConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
    inflight: Inflight,
    hits: Mutex<u64>,
    misses: Mutex<u64>,
}

impl HttpClient {
    pub fn new(config: EndpointConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        let api_key = config
            .api_key_env
            .as_ref()
            .and_then(|name| std::env::var(name).ok());
        HttpClient {
            config,
            agent,
            api_key,
            inflight: Inflight::new(),
            hits: Mutex::new(0),
            misses: Mutex::new(0),
        }
    }

    /// (cache hits, cache misses) so far.
    pub fn cache_stats(&self) -> (u64, u64) {
        (*self.hits.lock().unwrap(), *self.misses.lock().unwrap())
    }

    fn cache_path(&self, key: &CacheKey) -> Option<PathBuf> {
        self.config
            .cache_dir
            .as_ref()
            .map(|dir| dir.join(format!("{}.json", key.as_hex())))
    }

    fn cache_read(&self, key: &CacheKey) -> Option<Completion> {
        let path = self.cache_path(key)?;
        let text = fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    fn cache_write(&self, key: &CacheKey, completion: &Completion) -> Result<(), ClientError> {
        let Some(path) = self.cache_path(key) else {
            return Ok(());
        };
        let dir = path.parent().expect("cache file has a parent");
        let wrap = |source: std::io::Error, p: &Path| ClientError::Cache {
            path: p.display().to_string(),
            source,
        };
        fs::create_dir_all(dir).map_err(|e| wrap(e, dir))?;
        let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
        let body = serde_json::to_string(completion).expect("completion serializes");
        fs::write(&tmp, body).map_err(|e| wrap(e, &tmp))?;
        fs::rename(&tmp, &path).map_err(|e| wrap(e, &path))?;
        Ok(())
    }

    fn call_once(&self, request: &CompletionRequest) -> Result<Completion, ClientError> {
        let wire = WireRequest {
            model: &self.config.model,
            prompt: &request.prompt,
            max_tokens: request.max_tokens,
            temperature: GREEDY_TEMPERATURE,
            stop: &request.stop,
            logprobs: request.want_scores.then_some(1),
        };
        let mut http_request = self.agent.post(&self.config.url);
        if let Some(key) = &self.api_key {
            http_request = http_request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = http_request
            .send_json(&wire)
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            let retriable = matches!(status, 429 | 500 | 502 | 503 | 504);
            let mut truncated = body;
            truncated.truncate(200);
            return Err(ClientError::Status { status, body: truncated, retriable });
        }
        let wire: WireResponse =
            serde_json::from_str(&body).map_err(|e| ClientError::MalformedResponse(e.to_string()))?;
        let mut text = wire.text;
        // Endpoints may ignore stop sequences; enforce them here.
        for stop in &request.stop {
            if let Some(pos) = text.find(stop.as_str()) {
                text.truncate(pos);
            }
        }
        Ok(Completion {
            text,
            token_scores: if request.want_scores { wire.token_scores } else { None },
        })
    }

    fn call_with_retries(&self, request: &CompletionRequest) -> Result<Completion, ClientError> {
        let attempts = 1 + self.config.max_retries;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let backoff = self.config.backoff_ms.saturating_mul(1 << (attempt - 1));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            match self.call_once(request) {
                Ok(completion) => return Ok(completion),
                Err(err) if err.retriable() => last = err.to_string(),
                Err(err) => return Err(err),
            }
        }
        Err(ClientError::RetriesExhausted { attempts, last })
    }

    /// Cache-first completion; network only on a miss, with identical
    /// in-flight requests collapsed onto one call.
    pub fn complete(&self, request: &CompletionRequest) -> Result<Completion, ClientError> {
        let key = CacheKey::for_request(&self.config.url, &self.config.model, request);
        if let Some(found) = self.cache_read(&key) {
            *self.hits.lock().unwrap() += 1;
            return Ok(found);
        }
        self.inflight.claim(&key);
        let result = (|| {
            // Another worker may have filled the cache while we waited.
            if let Some(found) = self.cache_read(&key) {
                *self.hits.lock().unwrap() += 1;
                return Ok(found);
            }
            *self.misses.lock().unwrap() += 1;
            let completion = self.call_with_retries(request)?;
            self.cache_write(&key, &completion)?;
            Ok(completion)
        })();
        self.inflight.release(&key);
        result
    }
}

impl TextCompletion for HttpClient {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, AgentError> {
        HttpClient::complete(self, request).map_err(|err| AgentError::Endpoint {
            prompt_digest: rng::digest_hex(&request.prompt),
            retriable: err.retriable(),
            detail: err.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cache_keys_distinguish_every_field() {
        let base = CompletionRequest {
            prompt: "p".into(),
            max_tokens: 16,
            stop: vec!["\n\nQ:".into()],
            want_scores: false,
        };
        let key = |url: &str, model: &str, req: &CompletionRequest| {
            CacheKey::for_request(url, model, req).as_hex().to_string()
        };
        let reference = key("u", "m", &base);
        assert_eq!(reference, key("u", "m", &base.clone()));
        assert_ne!(reference, key("u2", "m", &base));
        assert_ne!(reference, key("u", "m2", &base));
        assert_ne!(reference, key("u", "m", &CompletionRequest { prompt: "q".into(), ..base.clone() }));
        assert_ne!(reference, key("u", "m", &CompletionRequest { max_tokens: 17, ..base.clone() }));
        assert_ne!(reference, key("u", "m", &CompletionRequest { stop: vec![], ..base.clone() }));
        assert_ne!(reference, key("u", "m", &CompletionRequest { want_scores: true, ..base }));
    }

    #[test]
    fn cache_files_round_trip_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let client = HttpClient::new(EndpointConfig {
            url: "http://127.0.0.1:1/unreachable".into(),
            model: "m".into(),
            api_key_env: None,
            timeout_secs: 1,
            cache_dir: Some(dir.path().to_path_buf()),
            max_retries: 0,
            backoff_ms: 1,
        });
        let request = CompletionRequest {
            prompt: "p".into(),
            max_tokens: 8,
            stop: vec![],
            want_scores: false,
        };
        let key = CacheKey::for_request(&client.config.url, &client.config.model, &request);
        let completion = Completion { text: "cached text".into(), token_scores: None };
        client.cache_write(&key, &completion).unwrap();
        let raw_first = fs::read(client.cache_path(&key).unwrap()).unwrap();
        let reloaded = client.cache_read(&key).unwrap();
        assert_eq!(reloaded, completion);
        client.cache_write(&key, &reloaded).unwrap();
        let raw_second = fs::read(client.cache_path(&key).unwrap()).unwrap();
        assert_eq!(raw_first, raw_second);

        // A cached request never touches the network (the URL is a dead
        // socket, so reaching it would error).
        let served = HttpClient::complete(&client, &request).unwrap();
        assert_eq!(served, completion);
        assert_eq!(client.cache_stats().0, 1);
    }
}
