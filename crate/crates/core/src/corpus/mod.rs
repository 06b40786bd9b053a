//! Problem corpus: JSONL ingestion, category labeling and the reframing of
//! solve-type problems as prove-type problems.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::modelgw::{Gateway, GatewayError, ModelSpec, TemplateId, Transcript};

mod category;

pub use category::Category;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("duplicate problem id {id:?} on lines {first} and {second}")]
    DuplicateId { id: String, first: usize, second: usize },
    #[error("problem {id}: solve-type problem has no answer")]
    MissingAnswer { id: String },
    #[error("unrecognized category label {raw:?}")]
    UnrecognizedLabel { raw: String },
    #[error(transparent)]
    Model(#[from] GatewayError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Prove,
    Solve,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Prove => "prove",
            ProblemKind::Solve => "solve",
        })
    }
}

/// One informal olympiad item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub id: String,
    pub source: String,
    pub statement_nl: String,
    pub kind: ProblemKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub informal_proof: Option<String>,
}

impl Problem {
    /// Checks the record-level invariants enforced on ingestion.
    pub fn check(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("problem id is empty".into());
        }
        match (self.kind, &self.answer) {
            (ProblemKind::Solve, None) => Err(format!("problem {}: kind=solve requires an answer", self.id)),
            (ProblemKind::Solve, Some(a)) if a.trim().is_empty() => {
                Err(format!("problem {}: kind=solve requires a nonempty answer", self.id))
            }
            (ProblemKind::Prove, Some(_)) => Err(format!("problem {}: kind=prove must not carry an answer", self.id)),
            _ => Ok(()),
        }
    }
}

/// Reads a corpus JSONL file. Blank lines are skipped.
pub fn ingest_corpus(path: impl AsRef<Path>) -> Result<Vec<Problem>, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

pub fn parse_corpus(reader: impl BufRead) -> Result<Vec<Problem>, CorpusError> {
    let mut problems = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io { path: String::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let problem: Problem = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        problem.check().map_err(|message| match (problem.kind, &problem.answer) {
            (ProblemKind::Solve, None) => CorpusError::MissingAnswer { id: problem.id.clone() },
            _ => CorpusError::Invalid { line: line_no, message },
        })?;
        if let Some(&first) = seen.get(&problem.id) {
            return Err(CorpusError::DuplicateId {
                id: problem.id,
                first,
                second: line_no,
            });
        }
        seen.insert(problem.id.clone(), line_no);
        problems.push(problem);
    }
    Ok(problems)
}

/// Serializes problems back to the JSONL corpus format.
pub fn write_corpus(problems: &[Problem], mut out: impl Write) -> std::io::Result<()> {
    for p in problems {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Asks `spec` for the problem's category and stores the label on `problem`.
pub fn label_category(problem: &mut Problem, gateway: &Gateway, spec: &ModelSpec) -> Result<Category, CorpusError> {
    let categories = Category::ALL.iter().map(|c| format!("- {}", c.display_name())).collect::<Vec<_>>().join("\n");
    let prompt = crate::modelgw::render_prompt(
        TemplateId::LabelCategory,
        &crate::modelgw::vars([("categories", categories.as_str()), ("problem", problem.statement_nl.as_str())]),
    )
    .expect("label template variables are complete");
    let mut transcript = Transcript::new();
    transcript.push_user(prompt);
    let raw = gateway.complete(spec, &transcript)?;
    let category = Category::from_label(&raw).ok_or(CorpusError::UnrecognizedLabel { raw })?;
    problem.category = Some(category);
    Ok(category)
}

/// Labels every problem without a category. Problems that already carry a
/// (human-verified) category keep it.
pub fn label_corpus(problems: &mut [Problem], gateway: &Gateway, spec: &ModelSpec) -> Result<usize, CorpusError> {
    let mut labeled = 0;
    for p in problems.iter_mut().filter(|p| p.category.is_none()) {
        label_category(p, gateway, spec)?;
        labeled += 1;
    }
    Ok(labeled)
}

/// Rewrites a solve-type problem as a prove-type problem claiming the given
/// answer. The answer stays on the returned problem for prompt context.
pub fn frame_solve_as_prove(problem: &Problem) -> Result<Problem, CorpusError> {
    match problem.kind {
        ProblemKind::Prove => Ok(problem.clone()),
        ProblemKind::Solve => {
            let answer = problem
                .answer
                .as_deref()
                .map(str::trim)
                .filter(|a| !a.is_empty())
                .ok_or_else(|| CorpusError::MissingAnswer { id: problem.id.clone() })?;
            let mut framed = problem.clone();
            framed.kind = ProblemKind::Prove;
            framed.statement_nl = format!("{}\nProve that the answer is: {}.", problem.statement_nl.trim_end(), answer);
            Ok(framed)
        }
    }
}

impl FromStr for ProblemKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prove" => Ok(ProblemKind::Prove),
            "solve" => Ok(ProblemKind::Solve),
            other => Err(format!("unknown problem kind {other:?}")),
        }
    }
}
