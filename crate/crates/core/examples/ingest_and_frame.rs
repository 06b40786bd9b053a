//! Load a corpus, frame solve problems as proofs and write it back out.

use std::io::Cursor;

use proofforge::corpus::{frame_solve_as_prove, parse_corpus, write_corpus, ProblemKind};

const CORPUS: &str = r#"{"id": "ex-1", "source": "example", "statement_nl": "Show that n + 0 = n.", "kind": "prove", "category": "Algebra"}
{"id": "ex-2", "source": "example", "statement_nl": "Find 2^10 mod 7.", "kind": "solve", "answer": "2", "category": "Number Theory"}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problems = parse_corpus(Cursor::new(CORPUS))?;
    let framed = problems.iter().map(frame_solve_as_prove).collect::<Result<Vec<_>, _>>()?;
    for (before, after) in problems.iter().zip(&framed) {
        println!("{} [{:?} -> {:?}] {}", before.id, before.kind, after.kind, after.statement_nl.replace('\n', " / "));
        assert_eq!(after.kind, ProblemKind::Prove);
    }
    let mut out = Vec::new();
    write_corpus(&framed, &mut out)?;
    print!("{}", String::from_utf8(out)?);
    Ok(())
}
