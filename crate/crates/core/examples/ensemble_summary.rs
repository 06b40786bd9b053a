//! Three models formalize the same problem; a judge ranks them and the lot
//! lands in a hub store.

use std::sync::Arc;

use proofforge::corpus::{Category, Problem, ProblemKind};
use proofforge::formalize::{run_ensemble, FormalizeConfig};
use proofforge::hub::HubStore;
use proofforge::leanrun::{FakeEntry, LeanRunner};
use proofforge::modelgw::{Gateway, ModelSpec, ScriptedBackend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = Problem {
        id: "ex-2".into(),
        source: "example".into(),
        statement_nl: "Show that 2^10 leaves remainder 2 on division by 7.".into(),
        kind: ProblemKind::Prove,
        answer: None,
        category: Some(Category::NumberTheory),
        informal_proof: None,
    };
    let backend = Arc::new(ScriptedBackend::new());
    let good = "```lean\nimport Mathlib\ntheorem ex : (2 : ℕ) ^ 10 % 7 = 2 := by\n  sorry\n```";
    backend.push("a", good);
    backend.push("b", "```lean\nimport Mathlib\ntheorem ex : 2 ^ 10 % 7 = two := by\n  sorry\n```");
    backend.push("b", good);
    backend.push("c", "I am not sure how to state this.");
    backend.push("c", good);
    backend.push(
        "judge",
        "```json\n{\"ranking\": [{\"model\": \"a\", \"notes\": \"explicit ℕ\"}, {\"model\": \"b\", \"notes\": \"fixed\"}, {\"model\": \"c\", \"notes\": \"late\"}], \"common_errors\": \"unbound names\", \"missing_conditions\": \"none\"}\n```",
    );
    let lean = LeanRunner::fake(vec![FakeEntry {
        pattern: "two".into(),
        log: "Main.lean:2:28: error: unknown identifier 'two'".into(),
    }]);
    let dir = tempfile::tempdir()?;
    let store = HubStore::open(dir.path())?;
    let models: Vec<ModelSpec> = ["a", "b", "c"].into_iter().map(ModelSpec::scripted).collect();
    let cfg = FormalizeConfig { use_context: false, ..FormalizeConfig::default() };
    let out = run_ensemble(&problem, &models, None, &ModelSpec::scripted("judge"), &Gateway::new(backend), &lean, &store, &cfg)?;
    for c in &out.candidates {
        println!("{}: {} after {} iteration(s)", c.model, c.final_status.as_str(), c.iterations.len());
    }
    for r in &out.summary.ranking {
        println!("#{} {} ({})", r.rank, r.model, r.notes);
    }
    println!("store holds {} events", store.last_seq());
    Ok(())
}
