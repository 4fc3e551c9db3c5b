//! Chat-completion clients. Live calls go over HTTP; a transcript of replies
//! can be recorded and replayed later for deterministic runs.

use std::collections::HashMap;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::prompting::{ChatMessage, Role};

pub const DEFAULT_API_KEY_ENV: &str = "LLM_API_KEY";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

const EXCERPT_CHARS: usize = 200;
const MAX_BACKOFF: Duration = Duration::from_secs(60);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the key, never the key itself.
    pub api_key_env: String,
    /// `None` leaves the provider default in place.
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// First retry delay; later retries double it.
    pub backoff_base_ms: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            base_url: DEFAULT_BASE_URL.into(),
            model: DEFAULT_MODEL.into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            temperature: None,
            max_tokens: None,
            timeout_secs: 60,
            max_retries: 3,
            backoff_base_ms: 1000,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.timeout_secs == 0 {
            return Err(LlmError::Config("timeout must be positive".into()));
        }
        if self.base_url.trim().is_empty() {
            return Err(LlmError::Config("empty API base URL".into()));
        }
        Ok(())
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("network error: {0}")]
    Network(String),
    #[error("HTTP {status}: {excerpt}")]
    Http { status: u16, excerpt: String },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("gave up after {attempts} attempts: {last}")]
    RetriesExhausted { attempts: u32, last: Box<LlmError> },
    #[error("transcript has no response #{cursor} for record '{record_id}'")]
    TranscriptExhausted { record_id: String, cursor: usize },
    #[error("transcript {path}: {message}")]
    Transcript { path: PathBuf, message: String },
    #[error("cannot write transcript sink {path}: {message}")]
    Sink { path: PathBuf, message: String },
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("invalid chat request: {0}")]
    InvalidMessages(String),
}

pub trait ChatClient: Send + Sync {
    /// Assistant text for `messages`. `record_id` keys replay and recording.
    fn chat(&self, record_id: &str, messages: &[ChatMessage]) -> Result<String, LlmError>;
}

fn check_messages(messages: &[ChatMessage]) -> Result<(), LlmError> {
    match messages.first() {
        None => Err(LlmError::InvalidMessages("no messages".into())),
        Some(m) if m.role != Role::System => Err(LlmError::InvalidMessages(
            "first message must be the system message".into(),
        )),
        Some(_) => Ok(()),
    }
}

/// Delay before retry `n` (0-based): `base * 2^n`, capped at one minute.
pub fn backoff_delay(base: Duration, n: u32) -> Duration {
    base.checked_mul(1u32.checked_shl(n).unwrap_or(u32::MAX))
        .unwrap_or(MAX_BACKOFF)
        .min(MAX_BACKOFF)
}

fn excerpt(body: &str) -> String {
    let mut s: String = body.chars().take(EXCERPT_CHARS).collect();
    if body.chars().count() > EXCERPT_CHARS {
        s.push('…');
    }
    s
}

/// Live client speaking the common `/chat/completions` JSON shape.
pub struct HttpChatClient {
    cfg: ModelConfig,
    api_key: String,
    http: reqwest::blocking::Client,
}

impl fmt::Debug for HttpChatClient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HttpChatClient")
            .field("cfg", &self.cfg)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

enum Attempt {
    Done(String),
    Transient(LlmError),
    Fatal(LlmError),
}

impl HttpChatClient {
    /// Reads the key from `cfg.api_key_env` once.
    pub fn from_env(cfg: ModelConfig) -> Result<Self, LlmError> {
        let key = std::env::var(&cfg.api_key_env)
            .ok()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| LlmError::MissingApiKey(cfg.api_key_env.clone()))?;
        Self::with_key(cfg, key)
    }

    pub fn with_key(cfg: ModelConfig, api_key: String) -> Result<Self, LlmError> {
        cfg.validate()?;
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self { cfg, api_key, http })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    fn request_body(&self, messages: &[ChatMessage]) -> Value {
        let mut body = json!({ "model": self.cfg.model, "messages": messages });
        if let Some(t) = self.cfg.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = self.cfg.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }

    fn attempt(&self, body: &str) -> Attempt {
        let resp = self
            .http
            .post(self.cfg.endpoint())
            .bearer_auth(&self.api_key)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .body(body.to_string())
            .send();
        let resp = match resp {
            Ok(r) => r,
            Err(e) if e.is_timeout() => {
                return Attempt::Transient(LlmError::Network(e.to_string()))
            }
            Err(e) => return Attempt::Fatal(LlmError::Network(e.to_string())),
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) if e.is_timeout() => {
                return Attempt::Transient(LlmError::Network(e.to_string()))
            }
            Err(e) => return Attempt::Fatal(LlmError::Network(e.to_string())),
        };
        if !status.is_success() {
            let err = LlmError::Http {
                status: status.as_u16(),
                excerpt: excerpt(&text),
            };
            return if status.as_u16() == 429 || status.is_server_error() {
                Attempt::Transient(err)
            } else {
                Attempt::Fatal(err)
            };
        }
        match extract_content(&text) {
            Ok(s) => Attempt::Done(s),
            Err(e) => Attempt::Fatal(e),
        }
    }
}

/// `choices[0].message.content` of a completion response.
pub fn extract_content(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body)
        .map_err(|e| LlmError::MalformedResponse(format!("not JSON ({e}): {}", excerpt(body))))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| {
            LlmError::MalformedResponse(format!("no choices[0].message.content: {}", excerpt(body)))
        })
}

impl ChatClient for HttpChatClient {
    fn chat(&self, record_id: &str, messages: &[ChatMessage]) -> Result<String, LlmError> {
        check_messages(messages)?;
        let body = self.request_body(messages).to_string();
        let base = Duration::from_millis(self.cfg.backoff_base_ms);
        let mut retries = 0;
        loop {
            log::debug!("chat request for {record_id}, attempt {}", retries + 1);
            match self.attempt(&body) {
                Attempt::Done(s) => return Ok(s),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Transient(e) if retries >= self.cfg.max_retries => {
                    return Err(LlmError::RetriesExhausted {
                        attempts: retries + 1,
                        last: Box::new(e),
                    })
                }
                Attempt::Transient(e) => {
                    let delay = backoff_delay(base, retries);
                    log::warn!("{record_id}: {e}; retrying in {delay:?}");
                    std::thread::sleep(delay);
                    retries += 1;
                }
            }
        }
    }
}

/// Recorded responses per evaluation record, in call order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    pub responses: IndexMap<String, Vec<String>>,
}

impl Transcript {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        let path = path.as_ref();
        let err = |message: String| LlmError::Transcript {
            path: path.to_path_buf(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| err(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes") + "\n"
    }

    pub fn push(&mut self, record_id: &str, response: String) {
        self.responses
            .entry(record_id.to_string())
            .or_default()
            .push(response);
    }
}

/// Serves transcript responses strictly in order; never recycles.
#[derive(Debug)]
pub struct ReplayClient {
    transcript: Transcript,
    cursors: Mutex<HashMap<String, usize>>,
}

impl ReplayClient {
    pub fn new(transcript: Transcript) -> Self {
        Self {
            transcript,
            cursors: Mutex::new(HashMap::new()),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        Transcript::load(path).map(Self::new)
    }

    /// Number of responses served so far for `record_id`.
    pub fn consumed(&self, record_id: &str) -> usize {
        self.cursors
            .lock()
            .unwrap()
            .get(record_id)
            .copied()
            .unwrap_or(0)
    }
}

impl ChatClient for ReplayClient {
    fn chat(&self, record_id: &str, messages: &[ChatMessage]) -> Result<String, LlmError> {
        check_messages(messages)?;
        let mut cursors = self.cursors.lock().unwrap();
        let cursor = cursors.entry(record_id.to_string()).or_insert(0);
        let response = self
            .transcript
            .responses
            .get(record_id)
            .and_then(|r| r.get(*cursor))
            .ok_or_else(|| LlmError::TranscriptExhausted {
                record_id: record_id.to_string(),
                cursor: *cursor,
            })?;
        *cursor += 1;
        Ok(response.clone())
    }
}

/// Delegates to `inner` and rewrites the sink after every successful call.
pub struct RecordingClient<C> {
    inner: C,
    sink: PathBuf,
    recorded: Mutex<Transcript>,
}

fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

impl<C: ChatClient> RecordingClient<C> {
    /// Creates (or truncates) the sink right away so an unwritable path
    /// fails before any API call.
    pub fn new(inner: C, sink: impl Into<PathBuf>) -> Result<Self, LlmError> {
        let sink = sink.into();
        let recorded = Transcript::default();
        write_atomic(&sink, &recorded.to_json()).map_err(|e| LlmError::Sink {
            path: sink.clone(),
            message: e.to_string(),
        })?;
        Ok(Self {
            inner,
            sink,
            recorded: Mutex::new(recorded),
        })
    }

    pub fn transcript(&self) -> Transcript {
        self.recorded.lock().unwrap().clone()
    }

    pub fn inner(&self) -> &C {
        &self.inner
    }
}

impl<C: ChatClient> ChatClient for RecordingClient<C> {
    fn chat(&self, record_id: &str, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let response = self.inner.chat(record_id, messages)?;
        let mut recorded = self.recorded.lock().unwrap();
        recorded.push(record_id, response.clone());
        write_atomic(&self.sink, &recorded.to_json()).map_err(|e| LlmError::Sink {
            path: self.sink.clone(),
            message: e.to_string(),
        })?;
        Ok(response)
    }
}

impl<C: ChatClient + ?Sized> ChatClient for &C {
    fn chat(&self, record_id: &str, messages: &[ChatMessage]) -> Result<String, LlmError> {
        (**self).chat(record_id, messages)
    }
}

impl<C: ChatClient + ?Sized> ChatClient for Box<C> {
    fn chat(&self, record_id: &str, messages: &[ChatMessage]) -> Result<String, LlmError> {
        (**self).chat(record_id, messages)
    }
}
