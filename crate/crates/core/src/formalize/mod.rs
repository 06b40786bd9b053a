//! Turning an informal problem into Lean statements: a refinement loop per
//! model driven by compiler feedback, fanned out over an ensemble and
//! compared by a summarizer model.

mod summary;
mod validity;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::contextkb::ContextPack;
use crate::corpus::{Problem, ProblemKind};
use crate::hub::{Event, HubError, HubStore};
use crate::leanrun::{format_feedback, DiagClass, Diagnostic, Severity, Status, ValidationResult, Validator};
use crate::modelgw::{
    context_section, extract_code_block, render_prompt, solution_section, vars, Gateway, ModelSpec, TemplateId,
    Transcript,
};
use crate::pool::map_bounded;

pub use summary::{degraded_ranking, parse_summary, render_candidates, summarize, EnsembleSummary, RankEntry};
pub use validity::{validity, Tally, Validity};

pub const NO_CODE_FEEDBACK: &str = "response contained no Lean code block";

#[derive(Debug, thiserror::Error)]
pub enum FormalizeError {
    #[error("problem {0} must be framed as a prove problem before formalization")]
    NotFramed(String),
    #[error("context pack is for {pack} but problem {problem} is {category}")]
    ContextMismatch {
        problem: String,
        category: String,
        pack: String,
    },
    #[error("an ensemble needs at least one model")]
    NoModels,
    #[error("model {0} appears twice in the ensemble")]
    DuplicateModel(String),
    #[error("max_iterations must be at least 1")]
    ZeroIterations,
    #[error(transparent)]
    Hub(#[from] HubError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormalizeConfig {
    pub max_iterations: usize,
    /// Include the category documentation in the first prompt.
    pub use_context: bool,
    /// Most diagnostics rendered into one refinement prompt.
    pub feedback_limit: usize,
    /// Extra attempts for a validation that failed for environment reasons.
    pub system_retries: u32,
    /// Candidates computed at once within an ensemble.
    pub workers: usize,
}

impl Default for FormalizeConfig {
    fn default() -> Self {
        FormalizeConfig {
            max_iterations: 6,
            use_context: true,
            feedback_limit: 20,
            system_retries: 2,
            workers: 4,
        }
    }
}

impl FormalizeConfig {
    /// No documentation and no feedback: one shot per model.
    pub fn zero_shot() -> Self {
        FormalizeConfig {
            max_iterations: 1,
            use_context: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub index: usize,
    pub code: String,
    pub validation: ValidationResult,
    /// What the next refinement prompt was (or would have been) given.
    pub feedback: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalStatus {
    Valid,
    Invalid,
    AbortedSystem,
}

impl FinalStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            FinalStatus::Valid => "valid",
            FinalStatus::Invalid => "invalid",
            FinalStatus::AbortedSystem => "aborted_system",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub problem_id: String,
    pub model: String,
    pub iterations: Vec<IterationRecord>,
    pub final_status: FinalStatus,
    pub final_code: String,
}

impl Candidate {
    /// Checks the structural invariants; used when candidates are persisted.
    pub fn check(&self, max_iterations: Option<usize>) -> Result<(), String> {
        let n = self.iterations.len();
        if n == 0 {
            return Err("candidate has no iterations".into());
        }
        if let Some(max) = max_iterations {
            if n > max {
                return Err(format!("candidate has {n} iterations, budget is {max}"));
            }
        }
        for (i, it) in self.iterations.iter().enumerate() {
            if it.index != i + 1 {
                return Err(format!("iteration {} has index {}", i + 1, it.index));
            }
        }
        let last = self.iterations.last().unwrap();
        let valid = last.validation.status == Status::Success;
        if valid != (self.final_status == FinalStatus::Valid) {
            return Err("final_status disagrees with the last validation".into());
        }
        if self.final_code != last.code {
            return Err("final_code is not the last iteration's code".into());
        }
        Ok(())
    }
}

fn no_code_result() -> ValidationResult {
    ValidationResult {
        status: Status::MathError,
        contains_sorry: false,
        diagnostics: vec![Diagnostic {
            severity: Severity::Error,
            file: String::new(),
            line: 1,
            col: 0,
            message: NO_CODE_FEEDBACK.into(),
            klass: DiagClass::Other,
        }],
        raw_log: String::new(),
        duration: 0.0,
    }
}

/// Feedback text for a failed validation.
pub fn feedback_for(result: &ValidationResult, limit: usize) -> String {
    match result.status {
        Status::Timeout => format!(
            "compilation timed out after {:.0}s; the statement may be too expensive to elaborate",
            result.duration
        ),
        _ => {
            let text = format_feedback(&result.diagnostics, limit);
            if text.is_empty() {
                result.raw_log.trim().to_string()
            } else {
                text
            }
        }
    }
}

/// First-iteration prompt for a problem.
pub fn initial_prompt(problem: &Problem, ctx: Option<&ContextPack>) -> String {
    let context = context_section(ctx.map(|c| c.body.as_str()));
    let solution = solution_section(problem.answer.as_deref());
    render_prompt(
        TemplateId::FormalizeInitial,
        &vars([
            ("context_section", context.as_str()),
            ("problem_id", problem.id.as_str()),
            ("problem", problem.statement_nl.trim()),
            ("solution_section", solution.as_str()),
        ]),
    )
    .expect("formalize template placeholders")
}

pub fn refine_prompt(feedback: &str) -> String {
    render_prompt(TemplateId::FormalizeRefine, &vars([("lean_error", feedback)])).expect("refine template placeholders")
}

fn check_inputs(problem: &Problem, ctx: Option<&ContextPack>, cfg: &FormalizeConfig) -> Result<(), FormalizeError> {
    if cfg.max_iterations == 0 {
        return Err(FormalizeError::ZeroIterations);
    }
    if problem.kind != ProblemKind::Prove {
        return Err(FormalizeError::NotFramed(problem.id.clone()));
    }
    if let (Some(pack), Some(cat)) = (ctx, problem.category) {
        if pack.category != cat {
            return Err(FormalizeError::ContextMismatch {
                problem: problem.id.clone(),
                category: cat.to_string(),
                pack: pack.category.to_string(),
            });
        }
    }
    Ok(())
}

/// Runs the refinement loop for one model. `ctx` is ignored when the config
/// turns context off.
pub fn formalize(
    problem: &Problem,
    spec: &ModelSpec,
    ctx: Option<&ContextPack>,
    gateway: &Gateway,
    validator: &dyn Validator,
    cfg: &FormalizeConfig,
) -> Result<Candidate, FormalizeError> {
    check_inputs(problem, ctx, cfg)?;
    let initial = initial_prompt(problem, if cfg.use_context { ctx } else { None });
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut previous: Option<(String, String)> = None;
    let finish = |iterations: Vec<IterationRecord>, status: FinalStatus| Candidate {
        problem_id: problem.id.clone(),
        model: spec.name.clone(),
        final_code: iterations.last().map(|i| i.code.clone()).unwrap_or_default(),
        iterations,
        final_status: status,
    };
    for index in 1..=cfg.max_iterations {
        let mut transcript = Transcript::new();
        transcript.push_user(initial.clone());
        if let Some((response, feedback)) = &previous {
            transcript.push_assistant(response.clone());
            transcript.push_user(refine_prompt(feedback));
        }
        let response = match gateway.complete(spec, &transcript) {
            Ok(r) => r,
            Err(e) => {
                tracing::warn!(model = %spec.name, problem = %problem.id, error = %e, "model call failed");
                iterations.push(IterationRecord {
                    index,
                    code: String::new(),
                    validation: ValidationResult::system_error("", format!("model call failed: {e}")),
                    feedback: String::new(),
                });
                return Ok(finish(iterations, FinalStatus::AbortedSystem));
            }
        };
        let (code, validation) = match extract_code_block(&response) {
            Ok(code) => {
                let mut retries = 0;
                loop {
                    let v = validator.validate(&code);
                    if v.status != Status::SystemError {
                        break (code, v);
                    }
                    if retries == cfg.system_retries {
                        iterations.push(IterationRecord {
                            index,
                            code,
                            validation: v,
                            feedback: String::new(),
                        });
                        return Ok(finish(iterations, FinalStatus::AbortedSystem));
                    }
                    retries += 1;
                }
            }
            Err(_) => (String::new(), no_code_result()),
        };
        if validation.status == Status::Success {
            iterations.push(IterationRecord {
                index,
                code,
                validation,
                feedback: String::new(),
            });
            return Ok(finish(iterations, FinalStatus::Valid));
        }
        let feedback = if code.is_empty() {
            NO_CODE_FEEDBACK.to_string()
        } else {
            feedback_for(&validation, cfg.feedback_limit)
        };
        iterations.push(IterationRecord {
            index,
            code,
            validation,
            feedback: feedback.clone(),
        });
        previous = Some((response, feedback));
    }
    Ok(finish(iterations, FinalStatus::Invalid))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutcome {
    /// In the order of the model list.
    pub candidates: Vec<Candidate>,
    pub summary: EnsembleSummary,
}

/// Formalizes `problem` with every model, summarizes, and persists the lot to
/// the hub store before returning.
#[allow(clippy::too_many_arguments)]
pub fn run_ensemble(
    problem: &Problem,
    models: &[ModelSpec],
    ctx: Option<&ContextPack>,
    summarizer: &ModelSpec,
    gateway: &Gateway,
    validator: &dyn Validator,
    store: &HubStore,
    cfg: &FormalizeConfig,
) -> Result<EnsembleOutcome, FormalizeError> {
    if models.is_empty() {
        return Err(FormalizeError::NoModels);
    }
    let mut seen = HashSet::new();
    for m in models {
        if !seen.insert(m.name.as_str()) {
            return Err(FormalizeError::DuplicateModel(m.name.clone()));
        }
    }
    check_inputs(problem, ctx, cfg)?;
    let candidates = map_bounded(models, cfg.workers, |spec| {
        // inputs were checked above; model and toolchain trouble is folded
        // into the candidate itself
        formalize(problem, spec, ctx, gateway, validator, cfg).expect("checked inputs")
    });
    let summary = summarize(problem, &candidates, summarizer, gateway);
    store.ensure_problem(problem)?;
    for c in &candidates {
        store.append(Event::CandidateAdded(c.clone()))?;
    }
    store.append(Event::SummaryAdded(summary.clone()))?;
    Ok(EnsembleOutcome { candidates, summary })
}
