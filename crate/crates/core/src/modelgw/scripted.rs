use std::collections::{HashMap, VecDeque};
use std::path::Path;

use parking_lot::Mutex;
use serde::Serialize;

use super::{Backend, BackendError, ModelSpec, Transcript};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScriptedReply {
    Text(String),
    /// Simulates a retryable transport failure.
    TransientFailure(String),
}

/// One request seen by the scripted backend, successful or not.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CallRecord {
    pub model: String,
    /// 0-based index of this call among the model's calls.
    pub index: usize,
    pub transcript: Transcript,
    pub failed: bool,
}

#[derive(Default)]
struct State {
    queues: HashMap<String, VecDeque<ScriptedReply>>,
    counts: HashMap<String, usize>,
    log: Vec<CallRecord>,
}

/// Deterministic backend replaying queued responses per model name.
#[derive(Default)]
pub struct ScriptedBackend {
    state: Mutex<State>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    /// Loads a fixture file: a JSON object mapping model name to an ordered
    /// list of response strings.
    pub fn from_fixture_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let map: HashMap<String, Vec<String>> =
            serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        let backend = ScriptedBackend::new();
        for (model, replies) in map {
            for r in replies {
                backend.push(&model, r);
            }
        }
        Ok(backend)
    }

    pub fn push(&self, model: &str, reply: impl Into<String>) {
        self.push_reply(model, ScriptedReply::Text(reply.into()));
    }

    pub fn push_failure(&self, model: &str, message: impl Into<String>) {
        self.push_reply(model, ScriptedReply::TransientFailure(message.into()));
    }

    pub fn push_all<S: Into<String>>(&self, model: &str, replies: impl IntoIterator<Item = S>) {
        for r in replies {
            self.push(model, r);
        }
    }

    fn push_reply(&self, model: &str, reply: ScriptedReply) {
        self.state.lock().queues.entry(model.to_string()).or_default().push_back(reply);
    }

    pub fn calls(&self) -> Vec<CallRecord> {
        self.state.lock().log.clone()
    }

    pub fn calls_for(&self, model: &str) -> Vec<CallRecord> {
        self.state.lock().log.iter().filter(|c| c.model == model).cloned().collect()
    }

    pub fn call_count(&self, model: &str) -> usize {
        self.state.lock().counts.get(model).copied().unwrap_or(0)
    }

    pub fn remaining(&self, model: &str) -> usize {
        self.state.lock().queues.get(model).map_or(0, VecDeque::len)
    }
}

impl Backend for ScriptedBackend {
    fn send(&self, spec: &ModelSpec, transcript: &Transcript) -> Result<String, BackendError> {
        let mut state = self.state.lock();
        let index = {
            let count = state.counts.entry(spec.name.clone()).or_insert(0);
            let index = *count;
            *count += 1;
            index
        };
        let reply = state.queues.get_mut(&spec.name).and_then(VecDeque::pop_front);
        let failed = !matches!(reply, Some(ScriptedReply::Text(_)));
        state.log.push(CallRecord {
            model: spec.name.clone(),
            index,
            transcript: transcript.clone(),
            failed,
        });
        match reply {
            Some(ScriptedReply::Text(t)) => Ok(t),
            Some(ScriptedReply::TransientFailure(m)) => Err(BackendError::Transient(m)),
            None => Err(BackendError::Underrun {
                model: spec.name.clone(),
                index,
            }),
        }
    }
}
