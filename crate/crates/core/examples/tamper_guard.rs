//! What the statement guard accepts and what it turns away.

use proofforge::prover::{check_statement_preserved, explain_guard};

const TASK: &str = "import Mathlib\n\ntheorem ex (a b : ℕ) (h : a ≤ b) : a < b + 1 := by\n  sorry";

fn main() {
    let cases = [
        ("proof only", TASK.replace("sorry", "omega")),
        ("extra comment", TASK.replace("sorry", "-- easy\n  omega")),
        ("dropped hypothesis", TASK.replace(" (h : a ≤ b)", "").replace("sorry", "omega")),
        ("weakened goal", TASK.replace("a < b + 1", "True").replace("sorry", "trivial")),
        ("native_decide", TASK.replace("sorry", "native_decide")),
        ("new axiom", format!("axiom cheat : False\n{}", TASK.replace("sorry", "exact cheat.elim"))),
    ];
    for (name, submitted) in &cases {
        let verdict = check_statement_preserved(TASK, submitted);
        let why = explain_guard(TASK, submitted).err().unwrap_or_default();
        println!("{name:20} {verdict:?} {why}");
    }
}
