//! The feedback prover: a wrong tactic, then a sorry, then a real proof.

use std::sync::Arc;

use proofforge::leanrun::{FakeEntry, LeanRunner};
use proofforge::modelgw::{Gateway, ModelSpec, ScriptedBackend};
use proofforge::prover::{pass_at_1, prove_multi_turn, ProofTask};

const TASK: &str = "import Mathlib\n\ntheorem ex (n : ℕ) : n + 0 = n := by\n  sorry";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let task = ProofTask::new("ex-1", TASK, "example")?;
    let backend = Arc::new(ScriptedBackend::new());
    for body in ["exact Nat.zero_add n", "sorry", "simp"] {
        backend.push("prover", format!("<output>\n{}\n</output>", TASK.replace("sorry", body)));
    }
    let lean = LeanRunner::fake(vec![FakeEntry {
        pattern: "Nat.zero_add".into(),
        log: "Main.lean:4:2: error: type mismatch\n  Nat.zero_add n\nhas type\n  0 + n = n : Prop".into(),
    }]);
    let attempt = prove_multi_turn(&task, &ModelSpec::scripted("prover"), 10, &Gateway::new(backend), &lean)?;
    for (i, t) in attempt.turns.iter().enumerate() {
        let status = t.validation.as_ref().map(|v| format!("{:?}", v.status)).unwrap_or_else(|| "not compiled".into());
        println!("turn {}: guard {:?}, {status}", i + 1, t.guard);
    }
    println!("{:?} in {} turn(s); pass@1 {}", attempt.outcome, attempt.turns_used, pass_at_1(std::slice::from_ref(&attempt))?);
    Ok(())
}
