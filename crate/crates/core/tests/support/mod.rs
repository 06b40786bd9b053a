#![allow(dead_code)]

pub mod brute_ted;

use std::path::PathBuf;
use std::sync::Arc;

use proofforge::corpus::{Category, Problem, ProblemKind};
use proofforge::formalize::{Candidate, FinalStatus, IterationRecord};
use proofforge::leanrun::{FakeEntry, LeanRunner, ValidationResult};
use proofforge::modelgw::{Backoff, Gateway, ScriptedBackend};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn problem(id: &str) -> Problem {
    Problem {
        id: id.into(),
        source: "synthetic".into(),
        statement_nl: "Show that n + 0 = n for every natural number n.".into(),
        kind: ProblemKind::Prove,
        answer: None,
        category: Some(Category::Algebra),
        informal_proof: None,
    }
}

pub fn candidate(pid: &str, model: &str, code: &str, valid: bool) -> Candidate {
    let log = if valid { String::new() } else { "Main.lean:1:0: error: unknown identifier 'x'".into() };
    Candidate {
        problem_id: pid.into(),
        model: model.into(),
        iterations: vec![IterationRecord {
            index: 1,
            code: code.into(),
            validation: ValidationResult::from_log(code, log, 0.0),
            feedback: String::new(),
        }],
        final_status: if valid { FinalStatus::Valid } else { FinalStatus::Invalid },
        final_code: code.into(),
    }
}

/// `BROKEN` anywhere in the code is an unknown identifier at 3:7.
pub fn fake_lean() -> LeanRunner {
    LeanRunner::fake(vec![FakeEntry {
        pattern: "BROKEN".into(),
        log: "Main.lean:3:7: error: unknown identifier 'BROKEN'".into(),
    }])
}

pub fn scripted() -> (Arc<ScriptedBackend>, Gateway) {
    let backend = Arc::new(ScriptedBackend::new());
    let gw = Gateway::new(backend.clone()).with_backoff(Backoff::NONE);
    (backend, gw)
}

pub fn lean_block(code: &str) -> String {
    format!("```lean\n{code}\n```")
}

pub fn tagged(code: &str) -> String {
    format!("<output>\n{code}\n</output>")
}
