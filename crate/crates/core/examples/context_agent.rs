//! The documentation agent explores a tiny fake mathlib checkout through the
//! read-only shell and submits a context pack.

use std::sync::Arc;

use proofforge::contextkb::{build_context, BashSandbox, ContextStore};
use proofforge::corpus::{Category, Problem, ProblemKind};
use proofforge::modelgw::{Gateway, ModelSpec, ScriptedBackend};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = tempfile::tempdir()?;
    let repo = root.path().join("mathlib");
    std::fs::create_dir_all(repo.join("Mathlib/Geometry"))?;
    std::fs::write(repo.join("Mathlib/Geometry/Circle.lean"), "/-- circles -/\ndef Circle := Unit\n")?;
    let sandbox = BashSandbox::new(&repo, root.path().join("notes"));

    let backend = Arc::new(ScriptedBackend::new());
    for call in [
        r#"{"tool": "run_bash", "argument": "ls Mathlib/Geometry"}"#,
        r#"{"tool": "run_bash", "argument": "rm -rf Mathlib"}"#,
        r#"{"tool": "run_bash", "argument": "cat Mathlib/Geometry/Circle.lean"}"#,
        r###"{"tool": "final_submit", "argument": "## Import\nimport Mathlib.Geometry.Circle\n\n## Key definitions\nCircle"}"###,
    ] {
        backend.push("agent", call);
    }
    let sample = Problem {
        id: "g-1".into(),
        source: "example".into(),
        statement_nl: "A circle passes through three points.".into(),
        kind: ProblemKind::Prove,
        answer: None,
        category: Some(Category::Geometry),
        informal_proof: None,
    };
    let ep = build_context(Category::Geometry, &[sample], &Gateway::new(backend), &ModelSpec::scripted("agent"), &sandbox, 10)?;
    for call in &ep.calls {
        println!("$ {}\n{}", call.argument, call.observation.lines().next().unwrap_or(""));
    }
    let store = ContextStore::open(root.path().join("context"))?;
    store.put(&ep.pack)?;
    let back = store.get(Category::Geometry)?;
    println!("stored pack, manifest {:?}\n{}", back.manifest, back.body);
    Ok(())
}
