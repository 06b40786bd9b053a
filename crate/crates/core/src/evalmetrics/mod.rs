//! Formalization-quality metrics: operator trees, tree edit distance and the
//! similarity built on it, bidirectional equivalence, and per-model reports.

mod beq;
mod optree;
mod report;
mod ted;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::formalize::Candidate;

pub use beq::{beq_check, beq_tasks, BeqError, BeqResult, GOAL_NAME, HYPOTHESIS_NAME};
pub use optree::{parse_optree, OpTree, ParseError};
pub use report::{
    aggregate_records, aggregate_rows, beq_coverage, heatmap, load_records, render_csv, render_heatmap_csv, render_markdown,
    score_candidates, ComparisonRecord, HeatmapRow, MetricsRow, Report, ReportFormat, CSV_HEADER, DEFAULT_THRESHOLD,
};
pub use ted::{gted_similarity, gted_with, ted, GtedResult, Normalization};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("{0}")]
    Input(String),
    #[error("gold {problem_id}: {source}")]
    Gold { problem_id: String, source: ParseError },
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One line of a gold file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldEntry {
    pub problem_id: String,
    pub theorem_code: String,
}

pub fn load_gold(path: impl AsRef<Path>) -> Result<Vec<GoldEntry>, MetricsError> {
    let out: Vec<GoldEntry> = read_jsonl(path.as_ref())?;
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = out.iter().find(|e| !seen.insert(e.problem_id.as_str())) {
        return Err(MetricsError::Input(format!("gold has two entries for {}", dup.problem_id)));
    }
    Ok(out)
}

/// Parses every gold statement; one bad statement fails the whole set.
pub fn gold_trees(gold: &[GoldEntry]) -> Result<BTreeMap<String, OpTree>, MetricsError> {
    gold.iter()
        .map(|g| {
            parse_optree(&g.theorem_code)
                .map(|t| (g.problem_id.clone(), t))
                .map_err(|source| MetricsError::Gold {
                    problem_id: g.problem_id.clone(),
                    source,
                })
        })
        .collect()
}

/// Reads every `*.jsonl` file in `dir` as one candidate per line, grouped
/// by model in file-name then line order.
pub fn load_candidates(dir: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<Candidate>>, MetricsError> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut out: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
    for f in files {
        let text = std::fs::read_to_string(&f)?;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let c: Candidate = serde_json::from_str(line).map_err(|source| MetricsError::Json { line: i + 1, source })?;
            out.entry(c.model.clone()).or_default().push(c);
        }
    }
    Ok(out)
}

/// One BEq verdict as written by `metrics beq`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeqRecord {
    pub model: String,
    pub problem_id: String,
    pub forward_proved: bool,
    pub backward_proved: bool,
    pub pass: bool,
    pub fast_path: bool,
}

impl BeqRecord {
    pub fn new(model: &str, problem_id: &str, r: &BeqResult) -> Self {
        BeqRecord {
            model: model.to_string(),
            problem_id: problem_id.to_string(),
            forward_proved: r.forward_proved,
            backward_proved: r.backward_proved,
            pass: r.pass,
            fast_path: r.fast_path,
        }
    }
}

/// Sets `beq` on every record that has a passing verdict.
pub fn merge_beq(records: &mut [ComparisonRecord], verdicts: &[BeqRecord]) {
    let passed: std::collections::HashSet<(&str, &str)> =
        verdicts.iter().filter(|v| v.pass).map(|v| (v.model.as_str(), v.problem_id.as_str())).collect();
    for r in records {
        r.beq = passed.contains(&(r.model.as_str(), r.problem_id.as_str()));
    }
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, MetricsError> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|source| MetricsError::Json { line: i + 1, source })?);
    }
    Ok(out)
}

pub fn load_beq_records(path: impl AsRef<Path>) -> Result<Vec<BeqRecord>, MetricsError> {
    read_jsonl(path.as_ref())
}
