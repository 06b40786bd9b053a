//! Serve a small hub store over HTTP and walk the annotation workflow the
//! way the dashboard does: list, compile, save, verify twice, export.

use std::sync::Arc;
use std::time::Duration;

use proofforge::corpus::{Category, Problem, ProblemKind};
use proofforge::hub::{bind, serve, AppState, HubStore};
use proofforge::leanrun::LeanRunner;
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let store = Arc::new(HubStore::open(dir.path())?);
    store.ensure_problem(&Problem {
        id: "ex-1".into(),
        source: "example".into(),
        statement_nl: "Show that n + 0 = n.".into(),
        kind: ProblemKind::Prove,
        answer: None,
        category: Some(Category::Algebra),
        informal_proof: None,
    })?;
    let listener = bind("127.0.0.1:0".parse()?).await?;
    let base = format!("http://{}", listener.local_addr()?);
    tokio::spawn(serve(listener, AppState { store: store.clone(), validator: Arc::new(LeanRunner::fake(vec![])) }));

    let c = reqwest::Client::new();
    println!("problems: {}", c.get(format!("{base}/problems")).send().await?.text().await?);
    let code = "import Mathlib\ntheorem ex (n : ℕ) : n + 0 = n := by\n  sorry";
    let rid = c.post(format!("{base}/problems/ex-1/compile")).json(&json!({ "code": code })).send().await?.json::<Value>().await?["request_id"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    loop {
        let r = c.get(format!("{base}/compile/{rid}")).send().await?;
        if r.status() == 200 {
            println!("compile: {}", r.json::<Value>().await?["status"]);
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    let saved: Value = c
        .post(format!("{base}/problems/ex-1/annotations"))
        .json(&json!({ "final_code": code, "editor": "ana" }))
        .send()
        .await?
        .json()
        .await?;
    let id = saved["id"].as_u64().unwrap_or_default();
    for editor in ["ana", "ben"] {
        let v: Value = c.post(format!("{base}/annotations/{id}/verify")).json(&json!({ "editor": editor })).send().await?.json().await?;
        println!("verified by {editor}: {}", v["status"]);
    }
    print!("export: {}", c.get(format!("{base}/export/annotations")).send().await?.text().await?);
    Ok(())
}
