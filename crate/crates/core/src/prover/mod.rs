//! Proving formal statements with a model: one shot, or a loop that feeds
//! compiler errors back for a fixed number of turns.

mod guard;

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::leanrun::{render_full, validate_with_retry, Status, ValidationResult, Validator};
use crate::lean_syntax::count_identifier;
use crate::modelgw::{extract_tagged_code, render_prompt, vars, Gateway, ModelSpec, TemplateId, Transcript, LAST_TURN_REMINDER};
use crate::pool::map_bounded;

pub use guard::{check_statement_preserved, explain as explain_guard, statement_prefix, Guard};

pub const TAMPERED_FEEDBACK: &str = "you are not allowed to change the theorem statement";
pub const NO_CODE_FEEDBACK: &str = "no Lean code was found inside <output>";
pub const SORRY_FEEDBACK: &str = "the proof still contains sorry";
pub const DEFAULT_TURNS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum ProverError {
    #[error("task {task}: {reason}")]
    InvalidTask { task: String, reason: String },
    #[error("max_turns must be at least 1")]
    ZeroTurns,
    #[error("task {0} has more than one attempt")]
    DuplicateTask(String),
    #[error("task file line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofTask {
    pub problem_id: String,
    /// A statement whose proof is a single `sorry`.
    pub theorem_code: String,
    #[serde(default)]
    pub source_bench: String,
}

impl ProofTask {
    pub fn new(problem_id: impl Into<String>, theorem_code: impl Into<String>, source_bench: impl Into<String>) -> Result<Self, ProverError> {
        let task = ProofTask {
            problem_id: problem_id.into(),
            theorem_code: theorem_code.into(),
            source_bench: source_bench.into(),
        };
        task.check()?;
        Ok(task)
    }

    pub fn check(&self) -> Result<(), ProverError> {
        let stripped = crate::lean_syntax::strip_comments(&self.theorem_code, crate::lean_syntax::Strings::Blank);
        let n = count_identifier(&stripped, "sorry");
        if n != 1 {
            return Err(ProverError::InvalidTask {
                task: self.problem_id.clone(),
                reason: format!("expected exactly one sorry, found {n}"),
            });
        }
        Ok(())
    }
}

/// Reads a JSONL task file, checking every task.
pub fn load_tasks(path: impl AsRef<Path>) -> Result<Vec<ProofTask>, ProverError> {
    let file = std::fs::File::open(path)?;
    let mut tasks = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let task: ProofTask = serde_json::from_str(&line).map_err(|source| ProverError::Parse { line: i + 1, source })?;
        task.check()?;
        tasks.push(task);
    }
    Ok(tasks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Multi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Proved,
    Failed,
    GaveUp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    /// sha256 of the user prompt sent on this turn.
    pub prompt_digest: String,
    pub response: String,
    pub code: Option<String>,
    /// Absent when nothing was compiled (no code, or a tampered statement).
    pub validation: Option<ValidationResult>,
    pub guard: Guard,
    /// Set when the model call itself failed; the attempt ends there.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Turn {
    pub fn proved(&self) -> bool {
        self.guard == Guard::Ok && self.validation.as_ref().is_some_and(ValidationResult::is_complete_proof)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofAttempt {
    pub task_id: String,
    pub model: String,
    pub mode: Mode,
    pub turns: Vec<Turn>,
    pub outcome: Outcome,
    pub turns_used: usize,
    /// Every message exchanged, in order.
    pub transcript: Transcript,
}

impl ProofAttempt {
    /// Checks the mode, budget and outcome invariants.
    pub fn check(&self, max_turns: usize) -> Result<(), String> {
        if self.turns_used != self.turns.len() {
            return Err(format!("turns_used {} but {} turns recorded", self.turns_used, self.turns.len()));
        }
        match self.mode {
            Mode::Single if self.turns_used != 1 => return Err("single-turn attempt used more than one turn".into()),
            Mode::Multi if !(1..=max_turns).contains(&self.turns_used) => {
                return Err(format!("{} turns outside 1..={max_turns}", self.turns_used))
            }
            _ => {}
        }
        let last_proved = self.turns.last().is_some_and(Turn::proved);
        if last_proved != (self.outcome == Outcome::Proved) {
            return Err("outcome disagrees with the last turn".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProverConfig {
    /// 1 runs the single-turn prompt; more runs the feedback loop.
    pub max_turns: usize,
    pub system_retries: u32,
    pub workers: usize,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig {
            max_turns: DEFAULT_TURNS,
            system_retries: 2,
            workers: 4,
        }
    }
}

fn digest(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

/// Runs one prompt through the model, the guard and the checker.
fn take_turn(
    task: &ProofTask,
    spec: &ModelSpec,
    transcript: &mut Transcript,
    prompt: String,
    gateway: &Gateway,
    validator: &dyn Validator,
    retries: u32,
) -> Turn {
    let prompt_digest = digest(&prompt);
    transcript.push_user(prompt);
    let response = match gateway.complete(spec, transcript) {
        Ok(r) => r,
        Err(e) => {
            tracing::warn!(model = %spec.name, task = %task.problem_id, error = %e, "model call failed");
            return Turn {
                prompt_digest,
                response: String::new(),
                code: None,
                validation: None,
                guard: Guard::NoCode,
                error: Some(e.to_string()),
            };
        }
    };
    transcript.push_assistant(response.clone());
    let Some(code) = extract_tagged_code(&response) else {
        return Turn {
            prompt_digest,
            response,
            code: None,
            validation: None,
            guard: Guard::NoCode,
            error: None,
        };
    };
    let guard = check_statement_preserved(&task.theorem_code, &code);
    let validation = (guard == Guard::Ok).then(|| validate_with_retry(validator, &code, retries).0);
    Turn {
        prompt_digest,
        response,
        code: Some(code),
        validation,
        guard,
        error: None,
    }
}

fn outcome_of(turns: &[Turn]) -> Outcome {
    match turns.last() {
        Some(t) if t.proved() => Outcome::Proved,
        Some(t) if t.guard == Guard::NoCode && t.error.is_none() => Outcome::GaveUp,
        _ => Outcome::Failed,
    }
}

/// What the next feedback prompt tells the model about `turn`.
pub fn turn_feedback(task: &ProofTask, turn: &Turn) -> String {
    match (turn.guard, &turn.validation) {
        (Guard::NoCode, _) => NO_CODE_FEEDBACK.to_string(),
        (Guard::Tampered, _) => {
            let why = turn
                .code
                .as_deref()
                .and_then(|c| guard::explain(&task.theorem_code, c).err())
                .unwrap_or_default();
            format!("{TAMPERED_FEEDBACK}: {why}")
        }
        (Guard::Ok, Some(v)) if v.status == Status::Timeout => {
            format!("compilation timed out after {:.0}s", v.duration)
        }
        (Guard::Ok, Some(v)) => {
            let mut text = render_full(&v.diagnostics);
            if text.is_empty() {
                text = v.raw_log.trim().to_string();
            }
            if v.status == Status::Success && v.contains_sorry {
                text = if text.is_empty() { SORRY_FEEDBACK.to_string() } else { format!("{SORRY_FEEDBACK}\n{text}") };
            }
            text
        }
        (Guard::Ok, None) => String::new(),
    }
}

/// One call with the single-turn prompt.
pub fn prove_single_turn(task: &ProofTask, spec: &ModelSpec, gateway: &Gateway, validator: &dyn Validator) -> Result<ProofAttempt, ProverError> {
    single_turn(task, spec, gateway, validator, ProverConfig::default().system_retries)
}

fn single_turn(task: &ProofTask, spec: &ModelSpec, gateway: &Gateway, validator: &dyn Validator, retries: u32) -> Result<ProofAttempt, ProverError> {
    task.check()?;
    let prompt = render_prompt(TemplateId::AtpSingle, &vars([("custom_formalization", task.theorem_code.trim())]))
        .expect("single-turn template placeholders");
    let mut transcript = Transcript::new();
    let turn = take_turn(task, spec, &mut transcript, prompt, gateway, validator, retries);
    let turns = vec![turn];
    Ok(ProofAttempt {
        task_id: task.problem_id.clone(),
        model: spec.name.clone(),
        mode: Mode::Single,
        outcome: outcome_of(&turns),
        turns_used: 1,
        turns,
        transcript,
    })
}

/// The feedback loop: stops at the first proved turn or after `max_turns`.
pub fn prove_multi_turn(
    task: &ProofTask,
    spec: &ModelSpec,
    max_turns: usize,
    gateway: &Gateway,
    validator: &dyn Validator,
) -> Result<ProofAttempt, ProverError> {
    multi_turn(task, spec, max_turns, gateway, validator, ProverConfig::default().system_retries)
}

fn multi_turn(
    task: &ProofTask,
    spec: &ModelSpec,
    max_turns: usize,
    gateway: &Gateway,
    validator: &dyn Validator,
    retries: u32,
) -> Result<ProofAttempt, ProverError> {
    if max_turns == 0 {
        return Err(ProverError::ZeroTurns);
    }
    task.check()?;
    let statement = task.theorem_code.trim();
    let budget = max_turns.to_string();
    let mut transcript = Transcript::new();
    let mut turns: Vec<Turn> = Vec::new();
    for n in 1..=max_turns {
        let prompt = match turns.last() {
            None => render_prompt(
                TemplateId::AtpMultiInitial,
                &vars([("max_turns", budget.as_str()), ("custom_formalization", statement)]),
            ),
            Some(prev) => {
                let errors = turn_feedback(task, prev);
                let reminder = if n == max_turns { LAST_TURN_REMINDER } else { "" };
                render_prompt(
                    TemplateId::AtpMultiFeedback,
                    &vars([
                        ("custom_formalization", statement),
                        ("validation_errors", errors.as_str()),
                        ("last_turn_reminder", reminder),
                    ]),
                )
            }
        }
        .expect("multi-turn template placeholders");
        let turn = take_turn(task, spec, &mut transcript, prompt, gateway, validator, retries);
        let stop = turn.proved() || turn.error.is_some();
        turns.push(turn);
        if stop {
            break;
        }
    }
    Ok(ProofAttempt {
        task_id: task.problem_id.clone(),
        model: spec.name.clone(),
        mode: Mode::Multi,
        outcome: outcome_of(&turns),
        turns_used: turns.len(),
        turns,
        transcript,
    })
}

/// Runs one attempt per task on a bounded pool, in task order.
pub fn run_attempts(
    tasks: &[ProofTask],
    spec: &ModelSpec,
    gateway: &Gateway,
    validator: &dyn Validator,
    cfg: &ProverConfig,
) -> Result<Vec<ProofAttempt>, ProverError> {
    if cfg.max_turns == 0 {
        return Err(ProverError::ZeroTurns);
    }
    map_bounded(tasks, cfg.workers, |task| {
        if cfg.max_turns == 1 {
            single_turn(task, spec, gateway, validator, cfg.system_retries)
        } else {
            multi_turn(task, spec, cfg.max_turns, gateway, validator, cfg.system_retries)
        }
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassAt1 {
    pub solved: usize,
    pub total: usize,
    pub rate: f64,
}

impl PassAt1 {
    /// "36/312"
    pub fn fraction(&self) -> String {
        format!("{}/{}", self.solved, self.total)
    }

    /// "11.5%"
    pub fn percent(&self) -> String {
        format!("{:.1}%", self.rate * 100.0)
    }
}

impl fmt::Display for PassAt1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.fraction(), self.percent())
    }
}

/// Share of tasks proved, one attempt per task.
pub fn pass_at_1(attempts: &[ProofAttempt]) -> Result<PassAt1, ProverError> {
    let mut seen = HashSet::new();
    for a in attempts {
        if !seen.insert(a.task_id.as_str()) {
            return Err(ProverError::DuplicateTask(a.task_id.clone()));
        }
    }
    let solved = attempts.iter().filter(|a| a.outcome == Outcome::Proved).count();
    let total = attempts.len();
    let rate = if total == 0 { 0.0 } else { solved as f64 / total as f64 };
    Ok(PassAt1 { solved, total, rate })
}
