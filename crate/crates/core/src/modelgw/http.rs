//! Chat-completion over HTTP in the two common JSON dialects.

use std::time::Duration;

use serde_json::{json, Map, Value};

use super::{Backend, BackendError, ModelSpec, Provider, Role, Transcript};

const ANTHROPIC_VERSION: &str = "2023-06-01";
const DEFAULT_MAX_TOKENS: u64 = 8192;

/// Environment variable holding the API key for a provider dialect.
pub fn api_key_var(provider: Provider) -> Option<&'static str> {
    match provider {
        Provider::HttpOpenaiStyle => Some("PROOFFORGE_API_KEY_OPENAI"),
        Provider::HttpAnthropicStyle => Some("PROOFFORGE_API_KEY_ANTHROPIC"),
        Provider::Scripted => None,
    }
}

#[derive(Default)]
pub struct HttpBackend {
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Request body for the OpenAI-style `chat/completions` dialect.
pub fn openai_body(spec: &ModelSpec, transcript: &Transcript) -> Value {
    let messages: Vec<Value> = transcript
        .messages()
        .iter()
        .map(|m| json!({"role": role_name(m.role), "content": m.content}))
        .collect();
    let mut body = Map::new();
    body.insert("model".into(), json!(spec.api_model()));
    body.insert("messages".into(), Value::Array(messages));
    merge_params(&mut body, &spec.params);
    Value::Object(body)
}

/// Request body for the Anthropic-style `messages` dialect.
pub fn anthropic_body(spec: &ModelSpec, transcript: &Transcript) -> Value {
    let messages: Vec<Value> = transcript
        .turns()
        .iter()
        .map(|m| json!({"role": role_name(m.role), "content": m.content}))
        .collect();
    let mut body = Map::new();
    body.insert("model".into(), json!(spec.api_model()));
    body.insert("max_tokens".into(), json!(DEFAULT_MAX_TOKENS));
    if let Some(system) = transcript.system() {
        body.insert("system".into(), json!(system));
    }
    body.insert("messages".into(), Value::Array(messages));
    merge_params(&mut body, &spec.params);
    Value::Object(body)
}

fn merge_params(body: &mut Map<String, Value>, params: &Map<String, Value>) {
    for (k, v) in params {
        body.insert(k.clone(), v.clone());
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

/// Extracts the assistant text from a response body.
pub fn parse_response(provider: Provider, body: &Value) -> Result<String, BackendError> {
    let text = match provider {
        Provider::HttpOpenaiStyle => body
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string),
        Provider::HttpAnthropicStyle => body.get("content").and_then(Value::as_array).map(|blocks| {
            blocks
                .iter()
                .filter(|b| b.get("type").and_then(Value::as_str) == Some("text"))
                .filter_map(|b| b.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join("")
        }),
        Provider::Scripted => None,
    };
    text.ok_or_else(|| BackendError::Fatal("response body has no assistant text".into()))
}

impl Backend for HttpBackend {
    fn send(&self, spec: &ModelSpec, transcript: &Transcript) -> Result<String, BackendError> {
        let endpoint = spec
            .endpoint
            .as_deref()
            .ok_or_else(|| BackendError::Fatal(format!("model {} has no endpoint", spec.name)))?;
        let key = api_key_var(spec.provider).and_then(|var| std::env::var(var).ok());
        let (body, mut req) = match spec.provider {
            Provider::HttpOpenaiStyle => {
                let req = self.client.post(endpoint);
                let req = match &key {
                    Some(k) => req.bearer_auth(k),
                    None => req,
                };
                (openai_body(spec, transcript), req)
            }
            Provider::HttpAnthropicStyle => {
                let req = self.client.post(endpoint).header("anthropic-version", ANTHROPIC_VERSION);
                let req = match &key {
                    Some(k) => req.header("x-api-key", k),
                    None => req,
                };
                (anthropic_body(spec, transcript), req)
            }
            Provider::Scripted => return Err(BackendError::Fatal("scripted model routed to HTTP backend".into())),
        };
        req = req.timeout(Duration::from_secs(spec.timeout_s)).json(&body);
        let resp = req.send().map_err(|e| BackendError::Transient(redact(&e.to_string(), key.as_deref())))?;
        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| BackendError::Transient(redact(&e.to_string(), key.as_deref())))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(BackendError::Transient(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let snippet: String = text.chars().take(500).collect();
            return Err(BackendError::Fatal(format!("HTTP {status}: {}", redact(&snippet, key.as_deref()))));
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| BackendError::Fatal(format!("invalid JSON: {e}")))?;
        parse_response(spec.provider, &value)
    }
}

fn redact(message: &str, key: Option<&str>) -> String {
    match key {
        Some(k) if !k.is_empty() => message.replace(k, "[redacted]"),
        _ => message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(provider: Provider) -> ModelSpec {
        let mut s = ModelSpec::scripted("m");
        s.provider = provider;
        s.endpoint = Some("http://localhost/v1".into());
        s.params.insert("temperature".into(), json!(0.2));
        s
    }

    fn transcript() -> Transcript {
        let mut t = Transcript::with_system("sys");
        t.push_user("hi");
        t
    }

    #[test]
    fn openai_body_keeps_system_in_messages() {
        let b = openai_body(&spec(Provider::HttpOpenaiStyle), &transcript());
        assert_eq!(b["messages"][0]["role"], "system");
        assert_eq!(b["messages"][1]["content"], "hi");
        assert_eq!(b["temperature"], 0.2);
    }

    #[test]
    fn anthropic_body_lifts_system() {
        let b = anthropic_body(&spec(Provider::HttpAnthropicStyle), &transcript());
        assert_eq!(b["system"], "sys");
        assert_eq!(b["messages"].as_array().unwrap().len(), 1);
        assert_eq!(b["max_tokens"], DEFAULT_MAX_TOKENS);
    }

    #[test]
    fn parses_both_dialects() {
        let o = json!({"choices": [{"message": {"role": "assistant", "content": "x"}}]});
        assert_eq!(parse_response(Provider::HttpOpenaiStyle, &o).unwrap(), "x");
        let a = json!({"content": [{"type": "text", "text": "a"}, {"type": "tool_use"}, {"type": "text", "text": "b"}]});
        assert_eq!(parse_response(Provider::HttpAnthropicStyle, &a).unwrap(), "ab");
        assert!(parse_response(Provider::HttpOpenaiStyle, &json!({})).is_err());
    }

    #[test]
    fn keys_are_redacted() {
        assert_eq!(redact("bad key sk-123 rejected", Some("sk-123")), "bad key [redacted] rejected");
    }
}
