//! Per-category documentation context, built once by a shell-using agent
//! over a mathlib checkout and stored on disk.

mod sandbox;
mod store;

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Category, Problem};
use crate::modelgw::{render_prompt, vars, Gateway, GatewayError, ModelSpec, TemplateId, Transcript};

pub use sandbox::{cap, normalize, BashSandbox, Rejected, DEFAULT_OBSERVATION_CAP};
pub use store::{ContextStore, Sidecar};

#[derive(Debug, thiserror::Error)]
pub enum ContextError {
    #[error("sampling ratio must be in (0, 1], got {0}")]
    InvalidRatio(f64),
    #[error("tool-call budget must be at least 1")]
    ZeroBudget,
    #[error("repository root {0} does not exist")]
    MissingRepo(PathBuf),
    #[error("agent exhausted its budget of {budget} tool calls without final_submit")]
    IncompleteContext { budget: usize, calls: Vec<AgentToolCall> },
    #[error("agent broke the tool-call protocol twice; last response: {response}")]
    Protocol { response: String, calls: Vec<AgentToolCall> },
    #[error(
        "no context pack for {category}; run `proofforge context build --category {}` or `proofforge context import <file> --category {}`",
        category.slug(),
        category.slug()
    )]
    NotBuilt { category: Category },
    #[error("context pack for {category} is corrupted: {detail}")]
    Corrupted { category: Category, detail: String },
    #[error("context pack body is empty")]
    EmptyBody,
    #[error("import failed: {0}")]
    Import(String),
    #[error(transparent)]
    Model(#[from] GatewayError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Hex SHA-256 of a pack body.
pub fn checksum(body: &str) -> String {
    hex::encode(Sha256::digest(body.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextPack {
    pub category: Category,
    pub body: String,
    /// Repository files the agent looked at, relative to the repository root.
    pub manifest: Vec<String>,
    pub checksum: String,
    pub built_at: DateTime<Utc>,
}

impl ContextPack {
    pub fn new(category: Category, body: String, manifest: Vec<String>) -> Self {
        ContextPack {
            category,
            checksum: checksum(&body),
            body,
            manifest,
            built_at: Utc::now(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tool {
    RunBash,
    FinalSubmit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentToolCall {
    pub tool: Tool,
    pub argument: String,
    /// Empty for `final_submit`.
    pub observation: String,
}

#[derive(Deserialize)]
struct WireCall {
    tool: Tool,
    argument: String,
}

/// Reads a tool call out of an agent reply: the whole reply as JSON, the
/// last ```json fence, or the outermost brace span.
pub fn parse_tool_call(response: &str) -> Option<(Tool, String)> {
    let attempt = |s: &str| serde_json::from_str::<WireCall>(s.trim()).ok().map(|c| (c.tool, c.argument));
    if let Some(c) = attempt(response) {
        return Some(c);
    }
    if let Some(start) = response.rfind("```json") {
        let body = &response[start + 7..];
        let body = body.find("```").map_or(body, |end| &body[..end]);
        if let Some(c) = attempt(body) {
            return Some(c);
        }
    }
    let (a, b) = (response.find('{')?, response.rfind('}')?);
    if a < b {
        attempt(&response[a..=b])
    } else {
        None
    }
}

/// Canonical form of a tool call as it appears in the agent transcript.
fn render_call(tool: Tool, argument: &str) -> String {
    serde_json::json!({"tool": tool, "argument": argument}).to_string()
}

const PROTOCOL_REMINDER: &str = "Your response was not a tool call. Every response must be exactly one JSON object: \
{\"tool\": \"run_bash\", \"argument\": \"<shell command>\"} or {\"tool\": \"final_submit\", \"argument\": \"<complete documentation>\"}.";

/// Seeded sample of `ceil(ratio * n)` problems from the category, in corpus
/// order.
pub fn sample_for_category(problems: &[Problem], cat: Category, ratio: f64, seed: u64) -> Result<Vec<Problem>, ContextError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(ContextError::InvalidRatio(ratio));
    }
    let pool: Vec<&Problem> = problems.iter().filter(|p| p.category == Some(cat)).collect();
    let n = pool.len();
    // the epsilon keeps 0.25 * 8 from rounding up to 3
    let k = ((ratio * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let k = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| pool[i].clone()).collect())
}

fn render_examples(samples: &[Problem]) -> String {
    samples
        .iter()
        .map(|p| format!("Problem {}:\n{}", p.id, p.statement_nl.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn opening_transcript(cat: Category, samples: &[Problem], scratch: &Path) -> Transcript {
    let wd = scratch.display().to_string();
    let system = render_prompt(TemplateId::KbAgentSystem, &vars([("working_directory", wd.as_str())]))
        .expect("kb system template placeholders");
    let examples = render_examples(samples);
    let user = render_prompt(
        TemplateId::KbAgentUser,
        &vars([
            ("category", cat.display_name()),
            ("examples", examples.as_str()),
            ("working_directory", wd.as_str()),
        ]),
    )
    .expect("kb user template placeholders");
    let mut t = Transcript::with_system(system);
    t.push_user(user);
    t
}

/// Rebuilds the transcript an episode produced from its stored tool calls.
pub fn replay_transcript(cat: Category, samples: &[Problem], scratch: &Path, calls: &[AgentToolCall]) -> Transcript {
    let mut t = opening_transcript(cat, samples, scratch);
    for call in calls {
        t.push_assistant(render_call(call.tool, &call.argument));
        if call.tool == Tool::RunBash {
            t.push_user(call.observation.clone());
        }
    }
    t
}

#[derive(Debug, Clone)]
pub struct Episode {
    pub pack: ContextPack,
    pub calls: Vec<AgentToolCall>,
}

/// Runs the documentation agent until it submits or spends `budget` tool
/// calls. Agent replies are normalized to their canonical JSON form in the
/// transcript so the episode replays exactly from its tool calls.
pub fn build_context(
    cat: Category,
    samples: &[Problem],
    gateway: &Gateway,
    agent: &ModelSpec,
    sandbox: &BashSandbox,
    budget: usize,
) -> Result<Episode, ContextError> {
    if budget == 0 {
        return Err(ContextError::ZeroBudget);
    }
    if !sandbox.repo_root().is_dir() {
        return Err(ContextError::MissingRepo(sandbox.repo_root().to_path_buf()));
    }
    std::fs::create_dir_all(sandbox.scratch())?;
    let mut transcript = opening_transcript(cat, samples, sandbox.scratch());
    let mut calls: Vec<AgentToolCall> = Vec::new();
    let mut manifest: Vec<String> = Vec::new();
    let mut warned = false;
    while calls.len() < budget {
        let response = gateway.complete(agent, &transcript)?;
        let parsed = parse_tool_call(&response).filter(|(tool, arg)| *tool == Tool::RunBash || !arg.trim().is_empty());
        let Some((tool, argument)) = parsed else {
            if warned {
                return Err(ContextError::Protocol { response, calls });
            }
            warned = true;
            transcript.push_assistant(response);
            transcript.push_user(PROTOCOL_REMINDER);
            continue;
        };
        transcript.push_assistant(render_call(tool, &argument));
        match tool {
            Tool::FinalSubmit => {
                calls.push(AgentToolCall {
                    tool,
                    argument: argument.clone(),
                    observation: String::new(),
                });
                let pack = ContextPack::new(cat, argument, manifest);
                return Ok(Episode { pack, calls });
            }
            Tool::RunBash => {
                let observation = sandbox.run(&argument);
                tracing::debug!(category = %cat, command = %argument, bytes = observation.len(), "agent tool call");
                for f in sandbox.referenced_files(&argument, &observation) {
                    if !manifest.contains(&f) {
                        manifest.push(f);
                    }
                }
                transcript.push_user(observation.clone());
                calls.push(AgentToolCall {
                    tool,
                    argument,
                    observation,
                });
            }
        }
    }
    Err(ContextError::IncompleteContext { budget, calls })
}
