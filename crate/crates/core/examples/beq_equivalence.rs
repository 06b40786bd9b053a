//! Bidirectional equivalence between a gold statement and a candidate, with a
//! scripted prover doing both directions.

use std::sync::Arc;

use proofforge::evalmetrics::{beq_check, beq_tasks};
use proofforge::leanrun::LeanRunner;
use proofforge::modelgw::{Gateway, ModelSpec, ScriptedBackend};

const GOLD: &str = "import Mathlib\ntheorem gold (n : ℕ) : n + 0 = n := by\n  sorry";
const CAND: &str = "import Mathlib\ntheorem cand (n : ℕ) : 0 + n = n := by\n  sorry";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (forward, backward) = beq_tasks(GOLD, CAND, "ex")?;
    println!("{}\n{}", forward.theorem_code, backward.theorem_code);

    let backend = Arc::new(ScriptedBackend::new());
    for task in [&forward, &backward] {
        let proved = task.theorem_code.replace("sorry", "simp");
        backend.push("prover", format!("<output>\n{}\n</output>", proved.trim_end()));
    }
    let r = beq_check(GOLD, CAND, &ModelSpec::scripted("prover"), 3, &Gateway::new(backend), &LeanRunner::fake(vec![]))?;
    println!("forward {} backward {} pass {}", r.forward_proved, r.backward_proved, r.pass);

    let renamed = GOLD.replace("(n : ℕ) : n + 0 = n", "(m : ℕ) : m + 0 = m");
    let quiet = Gateway::new(Arc::new(ScriptedBackend::new()));
    let same = beq_check(GOLD, &renamed, &ModelSpec::scripted("prover"), 3, &quiet, &LeanRunner::fake(vec![]))?;
    println!("alpha-renamed copy: pass {} without the prover: {}", same.pass, same.fast_path);
    Ok(())
}
