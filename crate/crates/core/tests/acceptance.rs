//! One line per acceptance criterion. Runs without the libtest harness so the
//! verdicts always reach stdout.

mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use proofforge::evalmetrics::{aggregate_records, gted_similarity, load_records, parse_optree, render_csv, ted, OpTree};
use proofforge::formalize::{formalize, FinalStatus, FormalizeConfig};
use proofforge::hub::{replay_from_log, BaseCandidate, Event, HubStore, NewAnnotation};
use proofforge::leanrun::{LeanBackendKind, LeanConfig, LeanRunner, Status, ValidationResult, Validator};
use proofforge::modelgw::ModelSpec;
use proofforge::prover::{
    check_statement_preserved, pass_at_1, prove_multi_turn, run_attempts, Guard, Outcome, ProofTask, ProverConfig,
};

use support::brute_ted::{distances_from, trees_up_to, T};
use support::{candidate, fake_lean, fixture, lean_block, problem, scripted, tagged};

type Check = Result<String, String>;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn run(name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let started = Instant::now();
    let verdict = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(detail)) if detail.starts_with("skip:") => Verdict::Skip(detail[5..].trim().to_string()),
        Ok(Ok(detail)) => Verdict::Pass(detail),
        Ok(Err(e)) => Verdict::Fail(e),
        Err(p) => Verdict::Fail(
            p.downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()),
        ),
    };
    let took = started.elapsed();
    let verdict = match (verdict, limit) {
        (Verdict::Pass(_), Some(l)) if took > l => Verdict::Fail(format!("took {took:.2?}, limit {l:?}")),
        (v, _) => v,
    };
    let (tag, detail, ok) = match verdict {
        Verdict::Pass(d) => ("PASS", d, true),
        Verdict::Fail(d) => ("FAIL", d, false),
        Verdict::Skip(d) => ("SKIP", d, true),
    };
    println!("{tag} {name} [{took:.2?}] {detail}");
    ok
}

fn refinement_replay() -> Check {
    let cfg = FormalizeConfig::default();
    let p = problem("p1");
    let (backend, gw) = scripted();
    backend.push("fixer", lean_block("theorem t (n : ℕ) : n + 0 = BROKEN := by\n  sorry"));
    backend.push("fixer", lean_block("theorem t (n : ℕ) : n + 0 = n := by\n  sorry"));
    let fixed = formalize(&p, &ModelSpec::scripted("fixer"), None, &gw, &fake_lean(), &cfg).map_err(|e| e.to_string())?;
    ensure(fixed.iterations.len() == 2, format!("fixer used {} iterations", fixed.iterations.len()))?;
    ensure(fixed.final_status == FinalStatus::Valid, "fixer did not end valid")?;

    for _ in 0..10 {
        backend.push("stuck", lean_block("theorem t : BROKEN := by\n  sorry"));
    }
    let stuck = formalize(&p, &ModelSpec::scripted("stuck"), None, &gw, &fake_lean(), &cfg).map_err(|e| e.to_string())?;
    ensure(stuck.iterations.len() == 6, format!("stuck used {} iterations", stuck.iterations.len()))?;
    ensure(stuck.final_status == FinalStatus::Invalid, "stuck did not end invalid")?;
    ensure(backend.call_count("stuck") == 6, "stuck was called a different number of times")?;
    Ok("fix after one round: 2 iterations valid; always broken: 6 iterations invalid".into())
}

fn ted_oracle() -> Check {
    let labels = ['a', 'b'];
    let all = trees_up_to(4, &labels);
    let opt: Vec<OpTree> = all.iter().map(T::to_optree).collect();
    let mut pairs = 0usize;
    let mut mismatches = Vec::new();
    for (i, a) in all.iter().enumerate() {
        // the cap of 4 covers every pair: larger intermediates never help
        let dist = distances_from(a, &labels, 4);
        for (j, b) in all.iter().enumerate() {
            let expected = dist[&vec![b.clone()]];
            let got = ted(&opt[i], &opt[j]);
            pairs += 1;
            if got != expected {
                mismatches.push(format!("{} vs {}: {got} != {expected}", opt[i], opt[j]));
            }
        }
    }
    ensure(mismatches.is_empty(), format!("{} mismatches, first {:?}", mismatches.len(), mismatches.first()))?;
    Ok(format!("{} trees, {pairs} pairs, 0 mismatches", all.len()))
}

fn random_tree(rng: &mut ChaCha8Rng, max_nodes: usize) -> OpTree {
    let n = rng.random_range(1..=max_nodes);
    // random parent pointers in preorder give a uniform-ish ordered shape
    let labels: Vec<String> = (0..n).map(|_| ["f", "g", "x", "#0"][rng.random_range(0..4)].to_string()).collect();
    let parents: Vec<usize> = (1..n).map(|i| rng.random_range(0..i)).collect();
    fn build(node: usize, labels: &[String], parents: &[usize]) -> OpTree {
        let kids = (1..labels.len())
            .filter(|&c| parents[c - 1] == node)
            .map(|c| build(c, labels, parents))
            .collect();
        OpTree::node(labels[node].clone(), kids)
    }
    build(0, &labels, &parents)
}

fn gted_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut identical = 0;
    for _ in 0..1000 {
        let a = random_tree(&mut rng, 6);
        let b = if rng.random_bool(0.2) { a.clone() } else { random_tree(&mut rng, 6) };
        let ab = gted_similarity(&a, &b);
        let ba = gted_similarity(&b, &a);
        ensure((0.0..=1.0).contains(&ab.similarity), format!("{a} vs {b}: {}", ab.similarity))?;
        ensure(ab.similarity == ba.similarity && ab.ted_cost == ba.ted_cost, format!("asymmetric on {a} vs {b}"))?;
        ensure((ab.similarity == 1.0) == (a == b), format!("identity rule broken on {a} vs {b}"))?;
        identical += usize::from(a == b);
    }
    // alpha-renamed statements land on the same tree
    let names = ["n", "m", "k", "x1", "y'"];
    for _ in 0..50 {
        let v = names[rng.random_range(0..names.len())];
        let w = names[rng.random_range(0..names.len())];
        let a = parse_optree(&format!("theorem t ({v} : ℕ) : ∀ q, {v} + q = q + {v} := sorry")).map_err(|e| e.to_string())?;
        let b = parse_optree(&format!("theorem s ({w} : ℕ) : ∀ r, {w} + r = r + {w} := sorry")).map_err(|e| e.to_string())?;
        ensure(gted_similarity(&a, &b).similarity == 1.0, format!("renaming {v}->{w} changed the tree"))?;
    }
    Ok(format!("1000 pairs ({identical} identical), 50 alpha-renamed pairs"))
}

const TASK: &str = "import Mathlib\n\ntheorem add_zero_id (n : ℕ) : n + 0 = n := by\n  sorry";

fn prover_budget() -> Check {
    let task = ProofTask::new("budget", TASK, "synthetic").map_err(|e| e.to_string())?;
    let broken = tagged(&TASK.replace("sorry", "exact BROKEN"));
    let good = tagged(&TASK.replace("sorry", "simp"));
    let mut seen = Vec::new();
    for k in [1usize, 3, 10] {
        let (backend, gw) = scripted();
        let model = format!("k{k}");
        for _ in 1..k {
            backend.push(&model, broken.clone());
        }
        backend.push(&model, good.clone());
        let a = prove_multi_turn(&task, &ModelSpec::scripted(&model), 10, &gw, &fake_lean()).map_err(|e| e.to_string())?;
        ensure(a.outcome == Outcome::Proved, format!("k={k}: not proved"))?;
        ensure(a.turns_used == k && a.turns.len() == k, format!("k={k}: turns_used {}", a.turns_used))?;
        ensure(backend.call_count(&model) == k, format!("k={k}: {} calls", backend.call_count(&model)))?;
        seen.push(k);
    }
    let (backend, gw) = scripted();
    for _ in 0..15 {
        backend.push("never", broken.clone());
    }
    let a = prove_multi_turn(&task, &ModelSpec::scripted("never"), 10, &gw, &fake_lean()).map_err(|e| e.to_string())?;
    ensure(a.turns_used == 10 && a.outcome == Outcome::Failed, format!("always failing used {} turns", a.turns_used))?;
    ensure(backend.call_count("never") == 10, "always failing made a different number of calls")?;
    Ok(format!("proved at turn {seen:?} as scripted; always failing stopped at 10"))
}

#[derive(serde::Deserialize)]
struct GuardCase {
    name: String,
    original: String,
    submitted: String,
    verdict: String,
}

fn tamper_corpus() -> Check {
    let text = std::fs::read_to_string(fixture("guard_cases.json")).map_err(|e| e.to_string())?;
    let cases: Vec<GuardCase> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    ensure(cases.len() >= 12, format!("only {} cases", cases.len()))?;
    let mut wrong = Vec::new();
    for c in &cases {
        let got = match check_statement_preserved(&c.original, &c.submitted) {
            Guard::Ok => "ok",
            Guard::Tampered => "tampered",
            Guard::NoCode => "no_code",
        };
        if got != c.verdict {
            wrong.push(format!("{}: {got}", c.name));
        }
    }
    ensure(wrong.is_empty(), format!("disagreements: {wrong:?}"))?;
    Ok(format!("{}/{} cases agree", cases.len(), cases.len()))
}

fn pass_at_1_fixture() -> Check {
    let mut out = Vec::new();
    for solved in [36usize, 1] {
        let tasks: Vec<ProofTask> = (0..312)
            .map(|i| ProofTask::new(format!("t{i:03}"), TASK.replace("add_zero_id", &format!("t{i:03}")), "synthetic").unwrap())
            .collect();
        let (backend, gw) = scripted();
        let model = format!("m{solved}");
        // one reply per task; which tasks get a proof is immaterial to pass@1
        for (i, t) in tasks.iter().enumerate() {
            let tactic = if i % (312 / solved) == 0 && i / (312 / solved) < solved { "simp" } else { "exact BROKEN" };
            backend.push(&model, tagged(&t.theorem_code.replace("sorry", tactic)));
        }
        let cfg = ProverConfig {
            max_turns: 1,
            workers: 1,
            ..ProverConfig::default()
        };
        let attempts = run_attempts(&tasks, &ModelSpec::scripted(&model), &gw, &fake_lean(), &cfg).map_err(|e| e.to_string())?;
        let score = pass_at_1(&attempts).map_err(|e| e.to_string())?;
        let want = if solved == 36 { ("36/312", "11.5%") } else { ("1/312", "0.3%") };
        ensure(
            (score.fraction().as_str(), score.percent().as_str()) == want,
            format!("got {} {}", score.fraction(), score.percent()),
        )?;
        out.push(score.to_string());
    }
    Ok(out.join(", "))
}

fn model_table_row() -> Check {
    let records = load_records(fixture("model_table_records.jsonl")).map_err(|e| e.to_string())?;
    let rows = aggregate_records(&records, 0.9).map_err(|e| e.to_string())?;
    let csv = render_csv(&rows);
    let line = csv
        .lines()
        .find(|l| l.starts_with("Claude Opus 4,"))
        .ok_or("no Claude Opus 4 row")?;
    // the four headline columns, then denominator and the two extra columns
    let expected = "Claude Opus 4,54,0.51,138,243,312,0.66,0";
    ensure(line == expected, format!("got {line:?}"))?;
    Ok(line.to_string())
}

fn random_event(rng: &mut ChaCha8Rng, store: &HubStore, step: usize) -> Option<Event> {
    let views = store.views();
    let pids: Vec<String> = views.problems.keys().cloned().collect();
    let pick = |rng: &mut ChaCha8Rng, v: &[String]| v[rng.random_range(0..v.len())].clone();
    match rng.random_range(0..6) {
        _ if pids.is_empty() => Some(Event::ProblemAdded(problem(&format!("p{step}")))),
        0 => Some(Event::ProblemAdded(problem(&format!("p{step}")))),
        1 => {
            let pid = pick(rng, &pids);
            let model = ["a", "b", "c"][rng.random_range(0..3)];
            Some(Event::CandidateAdded(candidate(&pid, model, "theorem t : True := by\n  sorry", rng.random_bool(0.7))))
        }
        2 => {
            let pid = pick(rng, &pids);
            let base = views
                .candidates
                .get(&pid)
                .and_then(|c| c.first())
                .map(|c| BaseCandidate {
                    model: c.model.clone(),
                    iteration: 1,
                });
            Some(Event::AnnotationSaved(NewAnnotation {
                problem_id: pid,
                final_code: format!("theorem t{step} : True := by\n  sorry"),
                base_candidate: base,
                editor: ["ana", "ben"][rng.random_range(0..2)].into(),
            }))
        }
        3 => {
            let ids: Vec<u64> = views.annotations.keys().copied().collect();
            let id = *ids.get(rng.random_range(0..ids.len().max(1)))?;
            Some(Event::AnnotationVerified {
                annotation_id: id,
                editor: ["ana", "ben", "cy"][rng.random_range(0..3)].into(),
            })
        }
        4 => Some(Event::CompileRequested {
            request_id: format!("r{step}"),
            problem_id: pick(rng, &pids),
            code: "theorem t : True := by\n  sorry".into(),
        }),
        _ => {
            let pending = views.compiles.values().find(|j| j.result.is_none())?;
            Some(Event::CompileCompleted {
                request_id: pending.request_id.clone(),
                result: ValidationResult::from_log(&pending.code, String::new(), 0.0),
            })
        }
    }
}

fn hub_replay() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut appended = 0;
    for round in 0..10 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let store = HubStore::open(dir.path()).map_err(|e| e.to_string())?.with_snapshot_every(7);
        for step in 0..60 {
            if let Some(ev) = random_event(&mut rng, &store, step) {
                // rejected events (duplicates and the like) are part of the test
                if store.append(ev).is_ok() {
                    appended += 1;
                }
            }
        }
        let live = store.views();
        drop(store);
        let replayed = replay_from_log(dir.path()).map_err(|e| e.to_string())?;
        ensure(replayed == live, format!("round {round}: replay differs from live views"))?;
        let reopened = HubStore::open(dir.path()).map_err(|e| e.to_string())?.views();
        ensure(reopened == live, format!("round {round}: snapshot reopen differs from live views"))?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = Arc::new(HubStore::open(dir.path()).map_err(|e| e.to_string())?);
    store.append(Event::ProblemAdded(problem("p"))).map_err(|e| e.to_string())?;
    let handles: Vec<_> = (0..8)
        .map(|t| {
            let store = store.clone();
            std::thread::spawn(move || {
                (0..25)
                    .map(|i| {
                        store
                            .append(Event::CompileRequested {
                                request_id: format!("t{t}-{i}"),
                                problem_id: "p".into(),
                                code: "x".into(),
                            })
                            .unwrap()
                    })
                    .collect::<Vec<u64>>()
            })
        })
        .collect();
    let mut seqs: Vec<u64> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
    seqs.sort_unstable();
    ensure(seqs == (2..=201).collect::<Vec<u64>>(), "concurrent appends left gaps or duplicates")?;
    let live = store.views();
    ensure(replay_from_log(dir.path()).map_err(|e| e.to_string())? == live, "concurrent log does not replay")?;
    Ok(format!("10 random logs ({appended} events) replay exactly; 200 concurrent appends got seqs 2..=201"))
}

const FIG1: &str = "import Mathlib

theorem floor_sum_even (n : ℕ) :
  Even ((Finset.sum (Finset.range n)
    fun i => ⌊(n : ℝ) / ((i + 1) : ℝ)⌋) + ⌊Real.sqrt n⌋) := by
  sorry
";

fn real_lean() -> Check {
    let Some(root) = std::env::var_os("PROOFFORGE_LEAN_ROOT").map(PathBuf::from) else {
        return Ok("skip: PROOFFORGE_LEAN_ROOT is not set (needs a Lean project with mathlib built)".into());
    };
    let cfg = LeanConfig {
        root: Some(root),
        backend: LeanBackendKind::Real,
        pool_size: Some(1),
        ..LeanConfig::default()
    };
    let runner = LeanRunner::from_config(&cfg).map_err(|e| e.to_string())?;
    let ok = runner.validate(FIG1);
    ensure(ok.status == Status::Success && ok.contains_sorry, format!("original: {:?}\n{}", ok.status, ok.raw_log))?;
    let bad = runner.validate(&FIG1.replace("Real.sqrt", "Real.sqrtt"));
    ensure(bad.status == Status::MathError, format!("mutated: {:?}", bad.status))?;
    let d = bad.errors().next().ok_or("no error diagnostic")?;
    ensure(d.line == 5, format!("diagnostic at line {}", d.line))?;
    Ok(format!("mutated identifier reported at {}:{}", d.line, d.col))
}

/// Name, time limit, check.
type Criterion = (&'static str, Option<Duration>, fn() -> Check);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("refinement-loop replay", Some(Duration::from_secs(5)), refinement_replay),
        ("TED oracle equivalence (<=4 nodes, 2 labels)", Some(Duration::from_secs(60)), ted_oracle),
        ("GTED metric properties (1000 pairs, <=6 nodes)", Some(Duration::from_secs(10)), gted_properties),
        ("prover budget exactness", None, prover_budget),
        ("tamper-guard corpus", None, tamper_corpus),
        ("pass@1 report fixture", None, pass_at_1_fixture),
        ("per-model table row replay", None, model_table_row),
        ("hub log replay and concurrent appends", None, hub_replay),
        ("real Lean toolchain check", None, real_lean),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        if !run(name, limit, f) {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed or skipped");
}
