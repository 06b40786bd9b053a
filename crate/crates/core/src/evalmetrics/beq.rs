//! Bidirectional equivalence: each statement must be provable from the
//! other, with the prover harness doing the proving.

use serde::{Deserialize, Serialize};

use super::optree::{parse_decl, DeclSpans, ParseError};
use crate::lean_syntax::{collapse_whitespace, mentions_identifier};
use crate::leanrun::Validator;
use crate::modelgw::{Gateway, ModelSpec};
use crate::prover::{prove_multi_turn, Outcome, ProofAttempt, ProofTask, ProverError};

pub const HYPOTHESIS_NAME: &str = "beq_hyp";
pub const GOAL_NAME: &str = "beq_goal";

#[derive(Debug, thiserror::Error)]
pub enum BeqError {
    #[error("theorem {theorem}: {source}")]
    Parse { theorem: String, source: ParseError },
    #[error("theorem {theorem}: {reason}")]
    Construct { theorem: String, reason: String },
    #[error(transparent)]
    Prover(#[from] ProverError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeqResult {
    /// `a ⊢ b`
    pub forward_proved: bool,
    /// `b ⊢ a`
    pub backward_proved: bool,
    pub pass: bool,
    /// Decided by tree identity, with no prover call.
    pub fast_path: bool,
    pub forward: Option<ProofAttempt>,
    pub backward: Option<ProofAttempt>,
}

struct Parsed {
    label: String,
    spans: DeclSpans,
    tree: super::OpTree,
}

fn parse(label: &str, code: &str) -> Result<Parsed, BeqError> {
    let (tree, spans) = parse_decl(code).map_err(|source| BeqError::Parse {
        theorem: label.to_string(),
        source,
    })?;
    let label = spans.name.clone().unwrap_or_else(|| label.to_string());
    Ok(Parsed { label, spans, tree })
}

impl Parsed {
    fn binders(&self) -> &str {
        self.spans.source[self.spans.binders.0..self.spans.binders.1].trim()
    }

    fn statement(&self) -> &str {
        self.spans.source[self.spans.statement.0..self.spans.statement.1].trim()
    }

    /// The whole statement as one proposition: `∀ binders, statement`.
    fn as_proposition(&self) -> String {
        let stmt = collapse_whitespace(self.statement());
        if self.binders().is_empty() {
            stmt
        } else {
            format!("∀ {}, {stmt}", collapse_whitespace(self.binders()))
        }
    }

    fn header_lines(&self) -> impl Iterator<Item = &str> {
        self.spans.source[..self.spans.decl_start]
            .lines()
            .map(str::trim)
            .filter(|l| ["import ", "open ", "set_option "].iter().any(|p| l.starts_with(p)))
    }
}

/// A sorry-file proving `goal` with `hyp` available as a named assumption.
fn build_direction(hyp: &Parsed, goal: &Parsed) -> Result<String, BeqError> {
    for p in [hyp, goal] {
        for reserved in [HYPOTHESIS_NAME, GOAL_NAME] {
            if mentions_identifier(&p.spans.source[p.spans.decl_start..], reserved) {
                return Err(BeqError::Construct {
                    theorem: p.label.clone(),
                    reason: format!("uses the reserved name {reserved}"),
                });
            }
        }
    }
    let mut imports: Vec<&str> = Vec::new();
    let mut others: Vec<&str> = Vec::new();
    for line in hyp.header_lines().chain(goal.header_lines()) {
        let bucket = if line.starts_with("import ") { &mut imports } else { &mut others };
        if !bucket.contains(&line) {
            bucket.push(line);
        }
    }
    let mut out = String::new();
    for l in imports.iter().chain(&others) {
        out.push_str(l);
        out.push('\n');
    }
    if !out.is_empty() {
        out.push('\n');
    }
    let goal_binders = collapse_whitespace(goal.binders());
    let sep = if goal_binders.is_empty() { "" } else { " " };
    out.push_str(&format!(
        "theorem {GOAL_NAME} ({HYPOTHESIS_NAME} : {}){sep}{goal_binders} :\n    {} := by\n  sorry\n",
        hyp.as_proposition(),
        collapse_whitespace(goal.statement())
    ));
    Ok(out)
}

/// The two proof tasks `a ⊢ b` and `b ⊢ a`.
pub fn beq_tasks(thm_a: &str, thm_b: &str, label: &str) -> Result<(ProofTask, ProofTask), BeqError> {
    let a = parse(&format!("{label}/a"), thm_a)?;
    let b = parse(&format!("{label}/b"), thm_b)?;
    let forward = ProofTask::new(format!("{label}:forward"), build_direction(&a, &b)?, "beq")?;
    let backward = ProofTask::new(format!("{label}:backward"), build_direction(&b, &a)?, "beq")?;
    Ok((forward, backward))
}

/// Checks that `thm_a` and `thm_b` state the same thing. Structurally
/// identical statements pass without calling the prover.
pub fn beq_check(
    thm_a: &str,
    thm_b: &str,
    prover: &ModelSpec,
    budget: usize,
    gateway: &Gateway,
    validator: &dyn Validator,
) -> Result<BeqResult, BeqError> {
    let a = parse("a", thm_a)?;
    let b = parse("b", thm_b)?;
    if a.tree == b.tree {
        return Ok(BeqResult {
            forward_proved: true,
            backward_proved: true,
            pass: true,
            fast_path: true,
            forward: None,
            backward: None,
        });
    }
    let label = format!("{}~{}", a.label, b.label);
    let forward_task = ProofTask::new(format!("{label}:forward"), build_direction(&a, &b)?, "beq")?;
    let backward_task = ProofTask::new(format!("{label}:backward"), build_direction(&b, &a)?, "beq")?;
    let forward = prove_multi_turn(&forward_task, prover, budget, gateway, validator)?;
    let backward = prove_multi_turn(&backward_task, prover, budget, gateway, validator)?;
    let forward_proved = forward.outcome == Outcome::Proved;
    let backward_proved = backward.outcome == Outcome::Proved;
    Ok(BeqResult {
        forward_proved,
        backward_proved,
        pass: forward_proved && backward_proved,
        fast_path: false,
        forward: Some(forward),
        backward: Some(backward),
    })
}
