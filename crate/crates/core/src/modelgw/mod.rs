//! Uniform chat-completion gateway over HTTP providers and a deterministic
//! scripted backend, plus every prompt template the pipeline renders.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use tracing::{debug, warn};

mod extract;
mod http;
mod scripted;
mod template;
mod transcript;

pub use extract::{extract_code_block, extract_tagged_code, ExtractionError};
pub use http::{anthropic_body, api_key_var, openai_body, parse_response, HttpBackend};
pub use scripted::{CallRecord, ScriptedBackend, ScriptedReply};
pub use template::{
    context_section, render_prompt, scan_placeholders, solution_section, vars, MissingPlaceholder, TemplateId, LAST_TURN_REMINDER,
};
pub use transcript::{Message, Role, RoleOrderError, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    HttpOpenaiStyle,
    HttpAnthropicStyle,
    Scripted,
}

fn default_timeout() -> u64 {
    600
}

fn default_retries() -> u32 {
    3
}

/// How to reach one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub provider: Provider,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Provider-side model identifier when it differs from `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    /// Passed through to the request body untouched.
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default = "default_timeout")]
    pub timeout_s: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requests_per_minute: Option<u32>,
}

impl ModelSpec {
    pub fn scripted(name: impl Into<String>) -> Self {
        ModelSpec {
            name: name.into(),
            provider: Provider::Scripted,
            endpoint: None,
            model: None,
            params: Map::new(),
            timeout_s: default_timeout(),
            max_retries: 0,
            requests_per_minute: None,
        }
    }

    pub fn with_retries(mut self, max_retries: u32) -> Self {
        self.max_retries = max_retries;
        self
    }

    pub fn api_model(&self) -> &str {
        self.model.as_deref().unwrap_or(&self.name)
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.name.trim().is_empty() {
            return Err(GatewayError::InvalidSpec("model name is empty".into()));
        }
        if self.provider != Provider::Scripted && self.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) {
            return Err(GatewayError::InvalidSpec(format!("model {} needs an endpoint", self.name)));
        }
        if self.requests_per_minute == Some(0) {
            return Err(GatewayError::InvalidSpec(format!("model {}: requests_per_minute must be positive", self.name)));
        }
        Ok(())
    }
}

/// Failure reported by a backend for a single request.
#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("transient transport failure: {0}")]
    Transient(String),
    #[error("request failed: {0}")]
    Fatal(String),
    #[error("scripted fixture for {model} has no response for call {index}")]
    Underrun { model: String, index: usize },
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum GatewayError {
    #[error("model {model}: transport failed after {attempts} attempts: {message}")]
    Transport {
        model: String,
        attempts: u32,
        message: String,
    },
    #[error("model {model}: {message}")]
    Rejected { model: String, message: String },
    #[error("scripted fixture underrun: model {model} has no response queued for call {index}")]
    FixtureUnderrun { model: String, index: usize },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport { .. })
    }
}

/// Anything that can answer a transcript for a model.
pub trait Backend: Send + Sync {
    fn send(&self, spec: &ModelSpec, transcript: &Transcript) -> Result<String, BackendError>;
}

/// Exponential backoff between retries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Backoff {
    pub base: Duration,
    pub cap: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            base: Duration::from_secs(1),
            cap: Duration::from_secs(30),
        }
    }
}

impl Backoff {
    pub const NONE: Backoff = Backoff {
        base: Duration::ZERO,
        cap: Duration::ZERO,
    };

    /// Delay before retry number `retry` (0-based): base·2^retry, capped.
    pub fn delay(&self, retry: u32) -> Duration {
        let factor = 1u32.checked_shl(retry.min(20)).unwrap_or(u32::MAX);
        self.base.saturating_mul(factor).min(self.cap)
    }
}

/// Token bucket refilled continuously at `per_minute` tokens per minute.
struct TokenBucket {
    per_minute: u32,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    fn new(per_minute: u32) -> Self {
        TokenBucket {
            per_minute,
            state: Mutex::new((f64::from(per_minute), Instant::now())),
        }
    }

    fn acquire(&self) {
        let rate = f64::from(self.per_minute) / 60.0;
        loop {
            let wait = {
                let mut st = self.state.lock();
                let now = Instant::now();
                let refill = now.duration_since(st.1).as_secs_f64() * rate;
                st.0 = (st.0 + refill).min(f64::from(self.per_minute));
                st.1 = now;
                if st.0 >= 1.0 {
                    st.0 -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - st.0) / rate)
            };
            std::thread::sleep(wait);
        }
    }
}

/// Routes requests to the right backend with retries and rate limiting.
pub struct Gateway {
    scripted: Arc<dyn Backend>,
    http: Arc<dyn Backend>,
    backoff: Backoff,
    limiters: Mutex<HashMap<String, Arc<TokenBucket>>>,
}

impl Gateway {
    /// A gateway whose scripted provider is served by `scripted`; HTTP
    /// providers go through [`HttpBackend`].
    pub fn new(scripted: Arc<dyn Backend>) -> Self {
        Gateway {
            scripted,
            http: Arc::new(HttpBackend::new()),
            backoff: Backoff::default(),
            limiters: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_http_backend(mut self, http: Arc<dyn Backend>) -> Self {
        self.http = http;
        self
    }

    pub fn with_backoff(mut self, backoff: Backoff) -> Self {
        self.backoff = backoff;
        self
    }

    fn limiter(&self, spec: &ModelSpec) -> Option<Arc<TokenBucket>> {
        let rpm = spec.requests_per_minute?;
        let mut map = self.limiters.lock();
        Some(
            map.entry(spec.name.clone())
                .or_insert_with(|| Arc::new(TokenBucket::new(rpm)))
                .clone(),
        )
    }

    /// Sends `transcript` to the model and returns the assistant text
    /// verbatim. Transient failures are retried up to `spec.max_retries`
    /// times.
    pub fn complete(&self, spec: &ModelSpec, transcript: &Transcript) -> Result<String, GatewayError> {
        spec.validate()?;
        match transcript.last() {
            _ if transcript.is_empty() => return Err(GatewayError::InvalidRequest("transcript is empty".into())),
            Some(m) if m.role != Role::User => {
                return Err(GatewayError::InvalidRequest("transcript must end with a user message".into()))
            }
            _ => {}
        }
        let backend = match spec.provider {
            Provider::Scripted => &self.scripted,
            _ => &self.http,
        };
        let limiter = self.limiter(spec);
        let mut attempt = 0u32;
        loop {
            if let Some(l) = &limiter {
                l.acquire();
            }
            attempt += 1;
            match backend.send(spec, transcript) {
                Ok(text) => {
                    debug!(model = %spec.name, attempt, "completion ok");
                    return Ok(text);
                }
                Err(BackendError::Transient(message)) => {
                    if attempt > spec.max_retries {
                        return Err(GatewayError::Transport {
                            model: spec.name.clone(),
                            attempts: attempt,
                            message,
                        });
                    }
                    let delay = self.backoff.delay(attempt - 1);
                    warn!(model = %spec.name, attempt, ?delay, %message, "transient failure, retrying");
                    std::thread::sleep(delay);
                }
                Err(BackendError::Fatal(message)) => {
                    return Err(GatewayError::Rejected {
                        model: spec.name.clone(),
                        message,
                    })
                }
                Err(BackendError::Underrun { model, index }) => return Err(GatewayError::FixtureUnderrun { model, index }),
            }
        }
    }
}
