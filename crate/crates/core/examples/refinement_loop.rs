//! One model, one problem: a broken formalization gets compiler feedback and
//! is fixed on the next iteration.

use std::sync::Arc;

use proofforge::corpus::{Category, Problem, ProblemKind};
use proofforge::formalize::{formalize, FormalizeConfig};
use proofforge::leanrun::{FakeEntry, LeanRunner};
use proofforge::modelgw::{Gateway, ModelSpec, ScriptedBackend};

fn reply(code: &str) -> String {
    format!("Here it is.\n```lean\n{code}\n```")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = Problem {
        id: "ex-1".into(),
        source: "example".into(),
        statement_nl: "Show that n + 0 = n for every natural number n.".into(),
        kind: ProblemKind::Prove,
        answer: None,
        category: Some(Category::Algebra),
        informal_proof: None,
    };
    let backend = Arc::new(ScriptedBackend::new());
    backend.push("m", reply("import Mathlib\ntheorem ex (n : ℕ) : n + 0 = Nat.idd n := by\n  sorry"));
    backend.push("m", reply("import Mathlib\ntheorem ex (n : ℕ) : n + 0 = n := by\n  sorry"));
    let lean = LeanRunner::fake(vec![FakeEntry {
        pattern: "Nat.idd".into(),
        log: "Main.lean:2:30: error: unknown identifier 'Nat.idd'".into(),
    }]);
    let cfg = FormalizeConfig { use_context: false, ..FormalizeConfig::default() };
    let c = formalize(&problem, &ModelSpec::scripted("m"), None, &Gateway::new(backend), &lean, &cfg)?;
    for it in &c.iterations {
        println!("iteration {}: {:?} {}", it.index, it.validation.status, it.feedback);
    }
    println!("final: {}\n{}", c.final_status.as_str(), c.final_code);
    Ok(())
}
