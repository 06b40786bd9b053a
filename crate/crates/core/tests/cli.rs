mod support;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use support::fixture;

fn proofforge(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_proofforge"))
        .arg("--config")
        .arg(fixture("proofforge.toml"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "proofforge {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn formalize_score_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let lines: Vec<String> = std::fs::read_to_string(fixture("corpus.jsonl"))
        .unwrap()
        .lines()
        .take(2)
        .map(String::from)
        .collect();
    std::fs::write(&corpus, lines.join("\n")).unwrap();
    let out = dir.path().join("run");

    let run = proofforge(&["formalize", "run", "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(
        stdout(&run),
        "syn-001: 2/2 valid\nsyn-002: 2/2 valid\nalpha: 2/2 valid (100.0%)\nbeta: 2/2 valid (100.0%)\nany model: 2/2 problems (100.0%)\n"
    );
    let beta = jsonl(&out.join("candidates/beta.jsonl"));
    assert_eq!(beta[0]["iterations"].as_array().unwrap().len(), 2);
    assert_eq!(beta[0]["iterations"][0]["validation"]["status"], "math_error");
    let summaries = jsonl(&out.join("summaries.jsonl"));
    assert_eq!(summaries[1]["ranking"][0]["model"], "beta");

    let records = dir.path().join("records.jsonl");
    let gted = proofforge(&[
        "metrics",
        "gted",
        "--gold",
        s(&fixture("gold.jsonl")),
        "--candidates",
        s(&out.join("candidates")),
        "--out",
        s(&records),
    ]);
    let csv = stdout(&gted);
    assert!(csv.starts_with("model,beq,gted_mean"), "{csv}");
    let recs = jsonl(&records);
    assert_eq!(recs.len(), 4);
    // alpha's first statement is the gold one up to a bound-variable rename
    let alpha1 = recs.iter().find(|r| r["model"] == "alpha" && r["problem_id"] == "syn-001").unwrap();
    assert_eq!(alpha1["gted"].as_f64(), Some(1.0));

    let md = proofforge(&["metrics", "report", "--format", "markdown", "--records", s(&records)]);
    assert!(stdout(&md).contains("| alpha |"), "{}", stdout(&md));

    let export = proofforge(&["export", "--store", s(&out.join("store"))]);
    assert_eq!(stdout(&export), "", "no verified annotations");
}

#[test]
fn prove_writes_attempts_and_pass_at_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("attempts");
    let store = dir.path().join("store");
    let run = proofforge(&[
        "prove",
        "run",
        "--tasks",
        s(&fixture("tasks.jsonl")),
        "--model",
        "prover",
        "--turns",
        "10",
        "--out",
        s(&out),
        "--store",
        s(&store),
    ]);
    assert_eq!(stdout(&run), "prover pass@1: 2/2 (100.0%)\n");
    let second: Value = serde_json::from_str(&std::fs::read_to_string(out.join("syn-002.prover.json")).unwrap()).unwrap();
    assert_eq!(second["turns_used"], 2);
    assert_eq!(second["outcome"], "proved");
    let score: Value = serde_json::from_str(&std::fs::read_to_string(out.join("pass_at_1.json")).unwrap()).unwrap();
    assert_eq!(score["solved"], 2);
    let log = std::fs::read_dir(&store).unwrap().count();
    assert!(log > 0);
}

#[test]
fn table_report_as_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("table.csv");
    proofforge(&[
        "metrics",
        "report",
        "--format",
        "csv",
        "--records",
        s(&fixture("model_table_records.jsonl")),
        "--heatmap",
        "0.5,0.9",
        "--out",
        s(&out),
    ]);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("Claude Opus 4,54,0.51,138,243,312")), "{csv}");
    assert!(csv.lines().any(|l| l.starts_with("GPT-5,38,0.48,124,235,312")), "{csv}");
    let heat = std::fs::read_to_string(dir.path().join("table.heatmap.csv")).unwrap();
    assert!(heat.starts_with("model,ge_0.5,ge_0.9"), "{heat}");
}

#[test]
fn bad_input_exits_nonzero() {
    let out = Command::new(env!("CARGO_BIN_EXE_proofforge"))
        .args(["metrics", "report", "--format", "csv", "--records", "/nonexistent.jsonl"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}
