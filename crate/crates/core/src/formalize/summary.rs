use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::Candidate;
use crate::corpus::Problem;
use crate::modelgw::{render_prompt, vars, Gateway, ModelSpec, TemplateId, Transcript};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankEntry {
    pub model: String,
    /// 1-based.
    pub rank: usize,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub problem_id: String,
    pub ranking: Vec<RankEntry>,
    pub common_errors: String,
    pub missing_conditions: String,
    /// The summarizer's full reply, or the failure that replaced it.
    pub raw: String,
}

#[derive(Deserialize)]
struct WireEntry {
    model: String,
    #[serde(default)]
    notes: String,
}

#[derive(Deserialize)]
struct WireSummary {
    ranking: Vec<WireEntry>,
    #[serde(default)]
    common_errors: String,
    #[serde(default)]
    missing_conditions: String,
}

/// The candidate listing embedded in the summary prompt.
pub fn render_candidates(candidates: &[Candidate]) -> String {
    candidates
        .iter()
        .map(|c| {
            let last = c.iterations.last();
            let compile = last.map_or("none".to_string(), |i| {
                serde_json::to_value(i.validation.status)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default()
            });
            let mut s = format!(
                "### {}\nstatus: {} (last compile: {compile}, iterations: {})\n```lean\n{}\n```",
                c.model,
                c.final_status.as_str(),
                c.iterations.len(),
                c.final_code
            );
            if let Some(fb) = last.map(|i| i.feedback.as_str()).filter(|f| !f.is_empty()) {
                s.push_str(&format!("\nremaining errors:\n{fb}"));
            }
            s
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Valid before invalid before aborted, then by model name.
pub fn degraded_ranking(candidates: &[Candidate]) -> Vec<RankEntry> {
    let mut order: Vec<&Candidate> = candidates.iter().collect();
    order.sort_by(|a, b| (a.final_status, &a.model).cmp(&(b.final_status, &b.model)));
    order
        .into_iter()
        .enumerate()
        .map(|(i, c)| RankEntry {
            model: c.model.clone(),
            rank: i + 1,
            notes: String::new(),
        })
        .collect()
}

/// Reads the trailing ```json block of a summarizer reply. The ranking is
/// kept only if it names every candidate exactly once.
pub fn parse_summary(problem_id: &str, raw: &str, candidates: &[Candidate]) -> EnsembleSummary {
    let parsed = raw.rfind("```json").and_then(|start| {
        let body = &raw[start + 7..];
        let body = body.find("```").map_or(body, |end| &body[..end]);
        serde_json::from_str::<WireSummary>(body.trim()).ok()
    });
    let Some(wire) = parsed else {
        return EnsembleSummary {
            problem_id: problem_id.to_string(),
            ranking: degraded_ranking(candidates),
            common_errors: String::new(),
            missing_conditions: String::new(),
            raw: raw.to_string(),
        };
    };
    let expected: HashSet<&str> = candidates.iter().map(|c| c.model.as_str()).collect();
    let named: Vec<&str> = wire.ranking.iter().map(|e| e.model.as_str()).collect();
    let unique: HashSet<&str> = named.iter().copied().collect();
    let ranking = if unique.len() == named.len() && unique == expected {
        wire.ranking
            .into_iter()
            .enumerate()
            .map(|(i, e)| RankEntry {
                model: e.model,
                rank: i + 1,
                notes: e.notes,
            })
            .collect()
    } else {
        tracing::warn!(problem = problem_id, "summary ranking is not a permutation of the candidates");
        degraded_ranking(candidates)
    };
    EnsembleSummary {
        problem_id: problem_id.to_string(),
        ranking,
        common_errors: wire.common_errors,
        missing_conditions: wire.missing_conditions,
        raw: raw.to_string(),
    }
}

/// Asks the summarizer to compare and rank the candidates. Never fails: an
/// unusable reply degrades the ranking, a failed call leaves it empty.
pub fn summarize(problem: &Problem, candidates: &[Candidate], summarizer: &ModelSpec, gateway: &Gateway) -> EnsembleSummary {
    let listing = render_candidates(candidates);
    let prompt = render_prompt(
        TemplateId::Summary,
        &vars([
            ("problem_id", problem.id.as_str()),
            ("problem", problem.statement_nl.trim()),
            ("candidates", listing.as_str()),
        ]),
    )
    .expect("summary template placeholders");
    let mut t = Transcript::new();
    t.push_user(prompt);
    match gateway.complete(summarizer, &t) {
        Ok(raw) => parse_summary(&problem.id, &raw, candidates),
        Err(e) => EnsembleSummary {
            problem_id: problem.id.clone(),
            ranking: Vec::new(),
            common_errors: String::new(),
            missing_conditions: String::new(),
            raw: format!("summarizer failed: {e}"),
        },
    }
}
