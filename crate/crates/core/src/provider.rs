//! Completion backends behind one interface: an HTTP chat endpoint, a
//! replay-only reader of recorded completions, and a deterministic
//! extractive mock for hermetic tests.
//!
//! Every completion is keyed by `hash(model ‖ prompt fingerprint ‖
//! canonicalized decoding params)` and cached one file per key, so a warmed
//! cache replays bit-identically on any machine.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::prompting::{parse_sections, Prompt};
use crate::token::{detokenize, tokenize_text};

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("replay_miss: no cached completion for key {key}")]
    ReplayMiss { key: String },
    #[error("http_status({status}): {detail}")]
    HttpStatus { status: u16, detail: String },
    #[error("network: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("invalid decoding params: {0}")]
    InvalidParams(String),
    #[error("empty prompt")]
    EmptyPrompt,
    #[error("cache record {path} does not match the prompt that requested it")]
    CacheMismatch { path: String },
    #[error("cache io: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Decoding controls passed through to the backend and recorded with every
/// completion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodingParams {
    pub max_new_tokens: usize,
    pub temperature: f64,
    pub top_k: Option<usize>,
    pub beam_width: Option<usize>,
    pub repetition_penalty: f64,
    pub seed: Option<i64>,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            max_new_tokens: 256,
            temperature: 0.0,
            top_k: None,
            beam_width: None,
            repetition_penalty: 1.0,
            seed: None,
        }
    }
}

impl DecodingParams {
    pub fn validate(&self) -> Result<(), ProviderError> {
        if self.max_new_tokens == 0 {
            return Err(ProviderError::InvalidParams("max_new_tokens must be positive".into()));
        }
        if self.temperature < 0.0 {
            return Err(ProviderError::InvalidParams("temperature must be non-negative".into()));
        }
        if self.repetition_penalty < 1.0 {
            return Err(ProviderError::InvalidParams("repetition_penalty must be >= 1".into()));
        }
        if self.top_k.is_some() && self.beam_width.is_some() {
            return Err(ProviderError::InvalidParams("top_k sampling and beam search are mutually exclusive".into()));
        }
        if matches!(self.top_k, Some(0)) || matches!(self.beam_width, Some(0)) {
            return Err(ProviderError::InvalidParams("top_k and beam_width must be positive when set".into()));
        }
        Ok(())
    }

    /// Stable field-order-independent encoding used in cache keys.
    pub fn canonical(&self) -> String {
        let mut fields = Vec::new();
        if let Some(b) = self.beam_width {
            fields.push(format!("beam_width={b}"));
        }
        fields.push(format!("max_new_tokens={}", self.max_new_tokens));
        fields.push(format!("repetition_penalty={}", self.repetition_penalty));
        if let Some(s) = self.seed {
            fields.push(format!("seed={s}"));
        }
        fields.push(format!("temperature={}", self.temperature));
        if let Some(k) = self.top_k {
            fields.push(format!("top_k={k}"));
        }
        fields.join("&")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    HttpChat,
    Replay,
    MockExtractive,
}

impl ProviderKind {
    pub fn parse(name: &str) -> Result<Self, ProviderError> {
        match name {
            "http" | "http_chat" => Ok(Self::HttpChat),
            "replay" => Ok(Self::Replay),
            "mock" | "mock_extractive" => Ok(Self::MockExtractive),
            other => Err(ProviderError::InvalidConfig(format!("unknown provider kind {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub count: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { count: 2, backoff_ms: 250 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    pub model_id: String,
    /// Name of the environment variable holding the API key; empty = none.
    #[serde(default)]
    pub auth_env: String,
    /// Empty path disables caching (mock only).
    #[serde(default)]
    pub cache_dir: PathBuf,
    #[serde(default = "default_concurrency")]
    pub max_concurrent_requests: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_concurrency() -> usize {
    4
}

impl ProviderConfig {
    pub fn mock() -> Self {
        Self {
            kind: ProviderKind::MockExtractive,
            endpoint: None,
            model_id: "mock-extractive".to_string(),
            auth_env: String::new(),
            cache_dir: PathBuf::new(),
            max_concurrent_requests: default_concurrency(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn replay(cache_dir: impl Into<PathBuf>, model_id: impl Into<String>) -> Self {
        Self {
            kind: ProviderKind::Replay,
            endpoint: None,
            model_id: model_id.into(),
            auth_env: String::new(),
            cache_dir: cache_dir.into(),
            max_concurrent_requests: default_concurrency(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn http(endpoint: impl Into<String>, model_id: impl Into<String>, cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            kind: ProviderKind::HttpChat,
            endpoint: Some(endpoint.into()),
            model_id: model_id.into(),
            auth_env: String::new(),
            cache_dir: cache_dir.into(),
            max_concurrent_requests: default_concurrency(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = dir.into();
        self
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        match self.kind {
            ProviderKind::HttpChat => {
                if self.endpoint.is_none() {
                    return Err(ProviderError::InvalidConfig("http_chat requires an endpoint".into()));
                }
                if self.cache_dir.as_os_str().is_empty() {
                    return Err(ProviderError::InvalidConfig("http_chat requires a cache_dir".into()));
                }
            }
            ProviderKind::Replay => {
                if self.endpoint.is_some() {
                    return Err(ProviderError::InvalidConfig("replay takes no endpoint".into()));
                }
                if self.cache_dir.as_os_str().is_empty() {
                    return Err(ProviderError::InvalidConfig("replay requires a cache_dir".into()));
                }
            }
            ProviderKind::MockExtractive => {
                if self.endpoint.is_some() {
                    return Err(ProviderError::InvalidConfig("mock_extractive takes no endpoint".into()));
                }
            }
        }
        if self.model_id.is_empty() {
            return Err(ProviderError::InvalidConfig("model_id must be non-empty".into()));
        }
        if self.max_concurrent_requests == 0 {
            return Err(ProviderError::InvalidConfig("max_concurrent_requests must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompletionSource {
    Live,
    Cache,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: usize,
    pub completion_tokens: usize,
}

/// One completion plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub prompt_fingerprint: String,
    pub model_id: String,
    pub params: DecodingParams,
    pub usage: Usage,
    pub source: CompletionSource,
}

/// On-disk cache record, one file per key.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub model_id: String,
    pub params: DecodingParams,
    pub prompt_fingerprint: String,
    pub text: String,
    pub usage: Usage,
    pub created_at: u64,
}

pub fn cache_key(model_id: &str, prompt_fingerprint: &str, params: &DecodingParams) -> String {
    let mut hasher = Sha256::new();
    for field in [model_id, prompt_fingerprint, &params.canonical()] {
        hasher.update(field.as_bytes());
        hasher.update([0x1f]);
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Live / cache / mock call counts for one provider instance.
#[derive(Debug, Default)]
struct SourceCounters {
    live: AtomicUsize,
    cache: AtomicUsize,
    mock: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SourceCounts {
    pub live: usize,
    pub cache: usize,
    pub mock: usize,
}

impl SourceCounts {
    pub fn total(&self) -> usize {
        self.live + self.cache + self.mock
    }
}

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// A configured completion backend.
pub struct Provider {
    cfg: ProviderConfig,
    client: Option<reqwest::blocking::Client>,
    counters: SourceCounters,
}

impl Provider {
    pub fn new(cfg: ProviderConfig) -> Result<Self, ProviderError> {
        cfg.validate()?;
        let client = match cfg.kind {
            ProviderKind::HttpChat => Some(
                reqwest::blocking::Client::builder()
                    .timeout(Duration::from_secs(120))
                    .build()
                    .map_err(|e| ProviderError::Network(e.to_string()))?,
            ),
            _ => None,
        };
        if !cfg.cache_dir.as_os_str().is_empty() {
            std::fs::create_dir_all(&cfg.cache_dir)?;
        }
        Ok(Self { cfg, client, counters: SourceCounters::default() })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    pub fn source_counts(&self) -> SourceCounts {
        SourceCounts {
            live: self.counters.live.load(AtomicOrdering::Relaxed),
            cache: self.counters.cache.load(AtomicOrdering::Relaxed),
            mock: self.counters.mock.load(AtomicOrdering::Relaxed),
        }
    }

    fn cache_enabled(&self) -> bool {
        !self.cfg.cache_dir.as_os_str().is_empty()
    }

    fn cache_path(&self, key: &str) -> PathBuf {
        self.cfg.cache_dir.join(format!("{key}.json"))
    }

    fn read_cache(&self, key: &str, prompt: &Prompt) -> Result<Option<CacheRecord>, ProviderError> {
        if !self.cache_enabled() {
            return Ok(None);
        }
        let path = self.cache_path(key);
        let data = match std::fs::read_to_string(&path) {
            Ok(d) => d,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let record: CacheRecord = serde_json::from_str(&data)?;
        if record.prompt_fingerprint != prompt.fingerprint {
            return Err(ProviderError::CacheMismatch { path: path.display().to_string() });
        }
        Ok(Some(record))
    }

    fn write_cache(&self, record: &CacheRecord) -> Result<(), ProviderError> {
        if !self.cache_enabled() {
            return Ok(());
        }
        let path = self.cache_path(&record.key);
        let tmp = self.cfg.cache_dir.join(format!(
            ".{}.tmp.{}.{}",
            record.key,
            std::process::id(),
            TMP_COUNTER.fetch_add(1, AtomicOrdering::Relaxed)
        ));
        std::fs::write(&tmp, serde_json::to_string_pretty(record)?)?;
        std::fs::rename(&tmp, &path)?;
        Ok(())
    }

    /// Complete a prompt, consulting the cache first.
    pub fn complete(&self, prompt: &Prompt, params: &DecodingParams) -> Result<Completion, ProviderError> {
        params.validate()?;
        if prompt.body.is_empty() {
            return Err(ProviderError::EmptyPrompt);
        }
        let key = cache_key(&self.cfg.model_id, &prompt.fingerprint, params);
        if let Some(record) = self.read_cache(&key, prompt)? {
            self.counters.cache.fetch_add(1, AtomicOrdering::Relaxed);
            return Ok(Completion {
                text: record.text,
                prompt_fingerprint: record.prompt_fingerprint,
                model_id: record.model_id,
                params: record.params,
                usage: record.usage,
                source: CompletionSource::Cache,
            });
        }
        match self.cfg.kind {
            ProviderKind::Replay => Err(ProviderError::ReplayMiss { key }),
            ProviderKind::MockExtractive => {
                let text = mock_extractive_text(prompt, params.max_new_tokens);
                let usage = Usage {
                    prompt_tokens: tokenize_text(&prompt.system_text).len() + tokenize_text(&prompt.body).len(),
                    completion_tokens: tokenize_text(&text).len(),
                };
                self.write_cache(&CacheRecord {
                    key,
                    model_id: self.cfg.model_id.clone(),
                    params: params.clone(),
                    prompt_fingerprint: prompt.fingerprint.clone(),
                    text: text.clone(),
                    usage,
                    created_at: epoch_seconds(),
                })?;
                self.counters.mock.fetch_add(1, AtomicOrdering::Relaxed);
                Ok(Completion {
                    text,
                    prompt_fingerprint: prompt.fingerprint.clone(),
                    model_id: self.cfg.model_id.clone(),
                    params: params.clone(),
                    usage,
                    source: CompletionSource::Mock,
                })
            }
            ProviderKind::HttpChat => {
                let (text, usage) = self.http_complete(prompt, params)?;
                self.write_cache(&CacheRecord {
                    key,
                    model_id: self.cfg.model_id.clone(),
                    params: params.clone(),
                    prompt_fingerprint: prompt.fingerprint.clone(),
                    text: text.clone(),
                    usage,
                    created_at: epoch_seconds(),
                })?;
                self.counters.live.fetch_add(1, AtomicOrdering::Relaxed);
                Ok(Completion {
                    text,
                    prompt_fingerprint: prompt.fingerprint.clone(),
                    model_id: self.cfg.model_id.clone(),
                    params: params.clone(),
                    usage,
                    source: CompletionSource::Live,
                })
            }
        }
    }

    fn http_complete(&self, prompt: &Prompt, params: &DecodingParams) -> Result<(String, Usage), ProviderError> {
        let endpoint = self.cfg.endpoint.as_deref().expect("validated");
        let client = self.client.as_ref().expect("validated");

        let mut payload = serde_json::json!({
            "model": self.cfg.model_id,
            "messages": [
                {"role": "system", "content": prompt.system_text},
                {"role": "user", "content": prompt.body},
            ],
            "temperature": params.temperature,
            "max_tokens": params.max_new_tokens,
        });
        if let Some(k) = params.top_k {
            payload["top_k"] = k.into();
        }
        if let Some(b) = params.beam_width {
            payload["beam_width"] = b.into();
        }
        if params.repetition_penalty != 1.0 {
            payload["repetition_penalty"] = params.repetition_penalty.into();
        }
        if let Some(s) = params.seed {
            payload["seed"] = s.into();
        }

        let mut last_err = None;
        for attempt in 0..=self.cfg.retry.count {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.cfg.retry.backoff_ms * attempt as u64));
            }
            let mut request = client.post(endpoint).json(&payload);
            if !self.cfg.auth_env.is_empty() {
                if let Ok(token) = std::env::var(&self.cfg.auth_env) {
                    request = request.bearer_auth(token);
                }
            }
            match request.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_server_error() {
                        last_err = Some(ProviderError::HttpStatus {
                            status: status.as_u16(),
                            detail: "server error".into(),
                        });
                        continue;
                    }
                    if !status.is_success() {
                        return Err(ProviderError::HttpStatus {
                            status: status.as_u16(),
                            detail: resp.text().unwrap_or_default(),
                        });
                    }
                    let value: serde_json::Value =
                        resp.json().map_err(|e| ProviderError::MalformedResponse(e.to_string()))?;
                    return parse_chat_response(&value, prompt);
                }
                Err(e) => {
                    last_err = Some(ProviderError::Network(e.to_string()));
                }
            }
        }
        Err(last_err.unwrap_or_else(|| ProviderError::Network("no attempt made".into())))
    }

    /// Ensure every prompt has a cache entry; returns the number of live
    /// calls issued. At most `max_concurrent_requests` requests in flight.
    pub fn warm_cache(&self, prompts: &[Prompt], params: &DecodingParams) -> Result<usize, ProviderError> {
        if self.cfg.kind != ProviderKind::HttpChat {
            return Err(ProviderError::InvalidConfig("warm_cache requires an http_chat provider".into()));
        }
        params.validate()?;

        let mut misses: Vec<&Prompt> = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for prompt in prompts {
            let key = cache_key(&self.cfg.model_id, &prompt.fingerprint, params);
            if self.read_cache(&key, prompt)?.is_none() && seen.insert(key) {
                misses.push(prompt);
            }
        }
        if misses.is_empty() {
            return Ok(0);
        }

        let next = AtomicUsize::new(0);
        let first_error: Mutex<Option<ProviderError>> = Mutex::new(None);
        let workers = self.cfg.max_concurrent_requests.min(misses.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                    if i >= misses.len() || first_error.lock().expect("lock").is_some() {
                        break;
                    }
                    if let Err(e) = self.complete(misses[i], params) {
                        first_error.lock().expect("lock").get_or_insert(e);
                        break;
                    }
                });
            }
        });
        match first_error.into_inner().expect("lock") {
            Some(err) => Err(err),
            None => Ok(misses.len()),
        }
    }
}

fn parse_chat_response(value: &serde_json::Value, prompt: &Prompt) -> Result<(String, Usage), ProviderError> {
    let text = value["choices"]
        .get(0)
        .and_then(|c| c["message"]["content"].as_str())
        .ok_or_else(|| ProviderError::MalformedResponse("missing choices[0].message.content".into()))?;
    if text.is_empty() {
        return Err(ProviderError::MalformedResponse("empty completion text".into()));
    }
    let usage = Usage {
        prompt_tokens: value["usage"]["prompt_tokens"]
            .as_u64()
            .map(|v| v as usize)
            .unwrap_or_else(|| tokenize_text(&prompt.system_text).len() + tokenize_text(&prompt.body).len()),
        completion_tokens: value["usage"]["completion_tokens"]
            .as_u64()
            .map(|v| v as usize)
            .unwrap_or_else(|| tokenize_text(text).len()),
    };
    Ok((text.to_string(), usage))
}

fn epoch_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

const SENTENCE_ENDS: [&str; 3] = [".", "!", "?"];

/// Deterministic stand-in for a model: the first sentence of every
/// non-exemplar section of the body, concatenated and capped at
/// `max_new_tokens` tokens.
pub fn mock_extractive_text(prompt: &Prompt, max_new_tokens: usize) -> String {
    let mut out_tokens: Vec<String> = Vec::new();
    for section in parse_sections(&prompt.body) {
        if section.name.starts_with("EXAMPLE") || section.name.starts_with("MANIFEST") {
            continue;
        }
        let tokens = tokenize_text(&section.content);
        if tokens.is_empty() {
            continue;
        }
        let end = tokens
            .iter()
            .position(|t| SENTENCE_ENDS.contains(&t.as_str()))
            .map(|i| i + 1)
            .unwrap_or(tokens.len());
        out_tokens.extend_from_slice(&tokens[..end]);
        if out_tokens.len() >= max_new_tokens {
            break;
        }
    }
    if out_tokens.is_empty() {
        out_tokens = tokenize_text(&prompt.body);
    }
    out_tokens.truncate(max_new_tokens);
    if out_tokens.is_empty() {
        return "(blank)".to_string();
    }
    detokenize(&out_tokens)
}
