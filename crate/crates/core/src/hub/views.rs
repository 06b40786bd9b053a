use std::collections::{BTreeMap, HashSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Event, EventRecord};
use crate::corpus::{Category, Problem, ProblemKind};
use crate::formalize::{Candidate, EnsembleSummary, FinalStatus};
use crate::leanrun::ValidationResult;
use crate::prover::{Mode, ProofAttempt};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaseCandidate {
    pub model: String,
    /// 1-based iteration of that candidate the edit started from.
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationStatus {
    Draft,
    VerifiedOnce,
    VerifiedTwice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    /// The sequence number of the event that saved it.
    pub id: u64,
    pub problem_id: String,
    pub final_code: String,
    pub base_candidate: Option<BaseCandidate>,
    pub editor: String,
    pub status: AnnotationStatus,
    /// Distinct editors who verified it, in order.
    pub verifiers: Vec<String>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileJob {
    pub request_id: String,
    pub problem_id: String,
    pub code: String,
    pub requested_at: DateTime<Utc>,
    pub result: Option<ValidationResult>,
}

/// One row of the problem list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSummary {
    pub id: String,
    pub category: Option<Category>,
    pub kind: ProblemKind,
    pub candidates: usize,
    pub valid: usize,
    /// The furthest any annotation of the problem has got.
    pub annotation_status: Option<AnnotationStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemDetail {
    pub problem: Problem,
    pub overview: ProblemSummary,
    pub annotations: Vec<Annotation>,
}

/// Everything derived from the log.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Views {
    pub last_seq: u64,
    pub problems: BTreeMap<String, Problem>,
    /// In insertion order per problem.
    pub candidates: BTreeMap<String, Vec<Candidate>>,
    pub summaries: BTreeMap<String, EnsembleSummary>,
    /// Keyed by task id.
    pub attempts: BTreeMap<String, Vec<ProofAttempt>>,
    pub annotations: BTreeMap<u64, Annotation>,
    pub compiles: BTreeMap<String, CompileJob>,
}

fn nonempty(what: &str, s: &str) -> Result<(), String> {
    if s.trim().is_empty() {
        Err(format!("{what} must not be empty"))
    } else {
        Ok(())
    }
}

impl Views {
    fn need_problem(&self, id: &str) -> Result<(), String> {
        if self.problems.contains_key(id) {
            Ok(())
        } else {
            Err(format!("unknown problem {id}"))
        }
    }

    /// Whether `event` may be appended now.
    pub fn admit(&self, event: &Event) -> Result<(), String> {
        match event {
            Event::ProblemAdded(p) => {
                nonempty("problem id", &p.id)?;
                if self.problems.contains_key(&p.id) {
                    return Err(format!("problem {} already exists", p.id));
                }
            }
            Event::CandidateAdded(c) => {
                self.need_problem(&c.problem_id)?;
                nonempty("model", &c.model)?;
                c.check(None)?;
                if self.candidates.get(&c.problem_id).is_some_and(|v| v.iter().any(|x| x.model == c.model)) {
                    return Err(format!("candidate {} for {} already exists", c.model, c.problem_id));
                }
            }
            Event::SummaryAdded(s) => {
                self.need_problem(&s.problem_id)?;
                if self.summaries.contains_key(&s.problem_id) {
                    return Err(format!("summary for {} already exists", s.problem_id));
                }
                if !s.ranking.is_empty() {
                    let expected: HashSet<&str> = self
                        .candidates
                        .get(&s.problem_id)
                        .map(|v| v.iter().map(|c| c.model.as_str()).collect())
                        .unwrap_or_default();
                    let named: Vec<&str> = s.ranking.iter().map(|r| r.model.as_str()).collect();
                    let unique: HashSet<&str> = named.iter().copied().collect();
                    if unique.len() != named.len() || unique != expected {
                        return Err("summary ranking must list every stored candidate exactly once".into());
                    }
                }
            }
            Event::AttemptAdded(a) => {
                nonempty("task id", &a.task_id)?;
                let budget = if a.mode == Mode::Single { 1 } else { usize::MAX };
                a.check(budget)?;
                if self.attempts.get(&a.task_id).is_some_and(|v| v.iter().any(|x| x.model == a.model && x.mode == a.mode)) {
                    return Err(format!("attempt for {} by {} already exists", a.task_id, a.model));
                }
            }
            Event::AnnotationSaved(n) => {
                self.need_problem(&n.problem_id)?;
                nonempty("final_code", &n.final_code)?;
                nonempty("editor", &n.editor)?;
                if let Some(b) = &n.base_candidate {
                    let found = self
                        .candidates
                        .get(&n.problem_id)
                        .and_then(|v| v.iter().find(|c| c.model == b.model))
                        .ok_or_else(|| format!("no candidate {} for {}", b.model, n.problem_id))?;
                    if b.iteration == 0 || b.iteration > found.iterations.len() {
                        return Err(format!("candidate {} has no iteration {}", b.model, b.iteration));
                    }
                }
            }
            Event::AnnotationVerified { annotation_id, editor } => {
                nonempty("editor", editor)?;
                if !self.annotations.contains_key(annotation_id) {
                    return Err(format!("unknown annotation {annotation_id}"));
                }
            }
            Event::CompileRequested { request_id, problem_id, .. } => {
                self.need_problem(problem_id)?;
                nonempty("request id", request_id)?;
                if self.compiles.contains_key(request_id) {
                    return Err(format!("compile request {request_id} already exists"));
                }
            }
            Event::CompileCompleted { request_id, .. } => match self.compiles.get(request_id) {
                None => return Err(format!("unknown compile request {request_id}")),
                Some(j) if j.result.is_some() => return Err(format!("compile request {request_id} already completed")),
                Some(_) => {}
            },
        }
        Ok(())
    }

    /// Folds one admitted record into the views.
    pub fn apply(&mut self, record: &EventRecord) {
        self.last_seq = record.seq;
        match &record.event {
            Event::ProblemAdded(p) => {
                self.problems.insert(p.id.clone(), p.clone());
            }
            Event::CandidateAdded(c) => self.candidates.entry(c.problem_id.clone()).or_default().push(c.clone()),
            Event::SummaryAdded(s) => {
                self.summaries.insert(s.problem_id.clone(), s.clone());
            }
            Event::AttemptAdded(a) => self.attempts.entry(a.task_id.clone()).or_default().push(a.clone()),
            Event::AnnotationSaved(n) => {
                self.annotations.insert(
                    record.seq,
                    Annotation {
                        id: record.seq,
                        problem_id: n.problem_id.clone(),
                        final_code: n.final_code.clone(),
                        base_candidate: n.base_candidate.clone(),
                        editor: n.editor.clone(),
                        status: AnnotationStatus::Draft,
                        verifiers: Vec::new(),
                        created_at: record.at,
                    },
                );
            }
            Event::AnnotationVerified { annotation_id, editor } => {
                if let Some(a) = self.annotations.get_mut(annotation_id) {
                    if !a.verifiers.contains(editor) {
                        a.verifiers.push(editor.clone());
                    }
                    a.status = match a.verifiers.len() {
                        0 => AnnotationStatus::Draft,
                        1 => AnnotationStatus::VerifiedOnce,
                        _ => AnnotationStatus::VerifiedTwice,
                    };
                }
            }
            Event::CompileRequested { request_id, problem_id, code } => {
                self.compiles.insert(
                    request_id.clone(),
                    CompileJob {
                        request_id: request_id.clone(),
                        problem_id: problem_id.clone(),
                        code: code.clone(),
                        requested_at: record.at,
                        result: None,
                    },
                );
            }
            Event::CompileCompleted { request_id, result } => {
                if let Some(j) = self.compiles.get_mut(request_id) {
                    j.result = Some(result.clone());
                }
            }
        }
    }

    pub fn annotations_for(&self, problem_id: &str) -> Vec<Annotation> {
        self.annotations.values().filter(|a| a.problem_id == problem_id).cloned().collect()
    }

    fn summary_of(&self, p: &Problem) -> ProblemSummary {
        let cands = self.candidates.get(&p.id).map(Vec::as_slice).unwrap_or_default();
        ProblemSummary {
            id: p.id.clone(),
            category: p.category,
            kind: p.kind,
            candidates: cands.len(),
            valid: cands.iter().filter(|c| c.final_status == FinalStatus::Valid).count(),
            annotation_status: self.annotations.values().filter(|a| a.problem_id == p.id).map(|a| a.status).max(),
        }
    }

    pub fn problem_summaries(&self) -> Vec<ProblemSummary> {
        self.problems.values().map(|p| self.summary_of(p)).collect()
    }

    pub fn problem_detail(&self, id: &str) -> Option<ProblemDetail> {
        let p = self.problems.get(id)?;
        Some(ProblemDetail {
            problem: p.clone(),
            overview: self.summary_of(p),
            annotations: self.annotations_for(id),
        })
    }
}
