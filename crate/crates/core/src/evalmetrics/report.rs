//! Per-model aggregation of compile, GTED and BEq results, and report output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{gted_with, parse_optree, MetricsError, Normalization, OpTree};
use crate::formalize::{Candidate, FinalStatus};

pub const DEFAULT_THRESHOLD: f64 = 0.9;

/// One candidate scored against gold: the unit that rows are folded from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub model: String,
    pub problem_id: String,
    pub compiled: bool,
    /// `None` when the problem has no gold statement.
    pub gted: Option<f64>,
    #[serde(default)]
    pub beq: bool,
}

impl ComparisonRecord {
    /// Non-compiling candidates score zero.
    fn score(&self) -> Option<f64> {
        self.gted.map(|g| if self.compiled { g } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub model: String,
    pub beq_count: usize,
    /// Over every problem with gold, non-compiling candidates counted as 0.
    pub gted_mean: f64,
    pub gted_above_threshold: usize,
    pub compile_success: usize,
    pub denominator: usize,
    /// Over compiling candidates with gold only.
    pub gted_mean_compiled: f64,
    /// Problems left out of the GTED columns for lack of a gold statement.
    pub gold_missing: usize,
}

impl MetricsRow {
    pub fn compile_percent(&self) -> String {
        percent(self.compile_success, self.denominator)
    }

    pub fn beq_percent(&self) -> String {
        percent(self.beq_count, self.denominator)
    }
}

fn percent(n: usize, d: usize) -> String {
    if d == 0 {
        return "0.0%".into();
    }
    format!("{:.1}%", 100.0 * n as f64 / d as f64)
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn by_model(records: &[ComparisonRecord]) -> BTreeMap<&str, Vec<&ComparisonRecord>> {
    let mut out: BTreeMap<&str, Vec<&ComparisonRecord>> = BTreeMap::new();
    for r in records {
        out.entry(r.model.as_str()).or_default().push(r);
    }
    out
}

/// Folds records into one row per model, in model order. Every model must
/// cover the same number of problems, each at most once.
pub fn aggregate_records(records: &[ComparisonRecord], threshold: f64) -> Result<Vec<MetricsRow>, MetricsError> {
    let groups = by_model(records);
    let mut denominator = None;
    let mut rows = Vec::with_capacity(groups.len());
    for (model, recs) in groups {
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = recs.iter().find(|r| !seen.insert(r.problem_id.as_str())) {
            return Err(MetricsError::Input(format!("{model} has two records for {}", dup.problem_id)));
        }
        match denominator {
            None => denominator = Some(recs.len()),
            Some(d) if d != recs.len() => {
                return Err(MetricsError::Input(format!("{model} covers {} problems, expected {d}", recs.len())));
            }
            Some(_) => {}
        }
        let scored: Vec<f64> = recs.iter().filter_map(|r| r.score()).collect();
        rows.push(MetricsRow {
            model: model.to_string(),
            beq_count: recs.iter().filter(|r| r.beq && r.compiled).count(),
            gted_mean: mean(scored.iter().copied()),
            gted_above_threshold: scored.iter().filter(|&&s| s > threshold).count(),
            compile_success: recs.iter().filter(|r| r.compiled).count(),
            denominator: recs.len(),
            gted_mean_compiled: mean(recs.iter().filter(|r| r.compiled).filter_map(|r| r.gted)),
            gold_missing: recs.iter().filter(|r| r.gted.is_none()).count(),
        });
    }
    Ok(rows)
}

/// Scores every candidate against its gold tree. `beq` holds passes keyed by
/// (model, problem); anything absent counts as a failure.
pub fn score_candidates(
    candidates_by_model: &BTreeMap<String, Vec<Candidate>>,
    gold: &BTreeMap<String, OpTree>,
    beq: &BTreeMap<(String, String), bool>,
    norm: Normalization,
) -> Vec<ComparisonRecord> {
    let mut out = Vec::new();
    for (model, cands) in candidates_by_model {
        for c in cands {
            let compiled = c.final_status == FinalStatus::Valid;
            let gted = gold.get(&c.problem_id).map(|g| {
                if !compiled {
                    return 0.0;
                }
                match parse_optree(&c.final_code) {
                    Ok(t) => gted_with(g, &t, norm).similarity,
                    Err(e) => {
                        tracing::warn!(model = %model, problem = %c.problem_id, error = %e, "candidate does not parse");
                        0.0
                    }
                }
            });
            out.push(ComparisonRecord {
                model: model.clone(),
                problem_id: c.problem_id.clone(),
                compiled,
                gted,
                beq: beq.get(&(model.clone(), c.problem_id.clone())).copied().unwrap_or(false),
            });
        }
    }
    out
}

pub fn aggregate_rows(
    candidates_by_model: &BTreeMap<String, Vec<Candidate>>,
    gold: &BTreeMap<String, OpTree>,
    beq: &BTreeMap<(String, String), bool>,
    threshold: f64,
) -> Result<Vec<MetricsRow>, MetricsError> {
    aggregate_records(&score_candidates(candidates_by_model, gold, beq, Normalization::default()), threshold)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub model: String,
    /// Fraction of scored comparisons at or above each threshold, in order.
    pub fractions: Vec<f64>,
}

pub fn heatmap(records: &[ComparisonRecord], thresholds: &[f64]) -> Vec<HeatmapRow> {
    by_model(records)
        .into_iter()
        .map(|(model, recs)| {
            let scored: Vec<f64> = recs.iter().filter_map(|r| r.score()).collect();
            let fractions = thresholds
                .iter()
                .map(|&t| {
                    if scored.is_empty() {
                        0.0
                    } else {
                        scored.iter().filter(|&&s| s >= t).count() as f64 / scored.len() as f64
                    }
                })
                .collect();
            HeatmapRow {
                model: model.to_string(),
                fractions,
            }
        })
        .collect()
}

/// Problems where at least one model's candidate passed BEq, over all problems seen.
pub fn beq_coverage(records: &[ComparisonRecord]) -> (usize, usize) {
    let mut any: BTreeMap<&str, bool> = BTreeMap::new();
    for r in records {
        *any.entry(&r.problem_id).or_default() |= r.beq && r.compiled;
    }
    (any.values().filter(|&&b| b).count(), any.len())
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<ComparisonRecord>, MetricsError> {
    super::read_jsonl(path.as_ref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub threshold: f64,
    pub rows: Vec<MetricsRow>,
    pub heatmap_thresholds: Vec<f64>,
    pub heatmap: Vec<HeatmapRow>,
}

impl Report {
    pub fn build(records: &[ComparisonRecord], threshold: f64, heatmap_thresholds: &[f64]) -> Result<Self, MetricsError> {
        Ok(Report {
            threshold,
            rows: aggregate_records(records, threshold)?,
            heatmap_thresholds: heatmap_thresholds.to_vec(),
            heatmap: heatmap(records, heatmap_thresholds),
        })
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Csv => render_csv(&self.rows),
            ReportFormat::Json => serde_json::to_string_pretty(self).expect("report serializes") + "\n",
            ReportFormat::Markdown => {
                let mut s = render_markdown(&self.rows);
                if !self.heatmap_thresholds.is_empty() {
                    s.push('\n');
                    s.push_str(&render_heatmap_markdown(&self.heatmap_thresholds, &self.heatmap));
                }
                s
            }
        }
    }

    /// Writes the report; csv also writes the heatmap next to it as
    /// `<stem>.heatmap.csv` when thresholds were given.
    pub fn emit(&self, format: ReportFormat, path: &Path) -> Result<(), MetricsError> {
        if self.rows.is_empty() {
            return Err(MetricsError::Input("report has no rows".into()));
        }
        std::fs::write(path, self.render(format))?;
        if format == ReportFormat::Csv && !self.heatmap_thresholds.is_empty() {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
            std::fs::write(path.with_file_name(format!("{stem}.heatmap.csv")), render_heatmap_csv(&self.heatmap_thresholds, &self.heatmap))?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str = "model,beq,gted_mean,gted_above,compile,denominator,gted_mean_compiled,gold_missing";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.2},{},{},{},{:.2},{}",
            csv_field(&r.model),
            r.beq_count,
            r.gted_mean,
            r.gted_above_threshold,
            r.compile_success,
            r.denominator,
            r.gted_mean_compiled,
            r.gold_missing
        );
    }
    out
}

/// Sorted by BEq count, best first, ties by model name.
pub fn render_markdown(rows: &[MetricsRow]) -> String {
    let mut sorted: Vec<&MetricsRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.beq_count.cmp(&a.beq_count).then_with(|| a.model.cmp(&b.model)));
    let mut out = String::from("| Model | BEq | GTED mean | GTED > thr | Compile | Total |\n|---|---:|---:|---:|---:|---:|\n");
    for r in sorted {
        let _ = writeln!(
            out,
            "| {} | {} | {:.2} | {} | {} | {} |",
            r.model.replace('|', "\\|"),
            r.beq_count,
            r.gted_mean,
            r.gted_above_threshold,
            r.compile_success,
            r.denominator
        );
    }
    out
}

pub fn render_heatmap_csv(thresholds: &[f64], rows: &[HeatmapRow]) -> String {
    let mut out = String::from("model");
    for t in thresholds {
        let _ = write!(out, ",ge_{t}");
    }
    out.push('\n');
    for r in rows {
        out.push_str(&csv_field(&r.model));
        for f in &r.fractions {
            let _ = write!(out, ",{f:.3}");
        }
        out.push('\n');
    }
    out
}

fn render_heatmap_markdown(thresholds: &[f64], rows: &[HeatmapRow]) -> String {
    let mut out = String::from("| Model |");
    for t in thresholds {
        let _ = write!(out, " ≥{t} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(thresholds.len()));
    out.push('\n');
    for r in rows {
        let _ = write!(out, "| {} |", r.model.replace('|', "\\|"));
        for f in &r.fractions {
            let _ = write!(out, " {f:.3} |");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formalize::IterationRecord;
    use crate::leanrun::ValidationResult;

    fn rec(model: &str, pid: &str, compiled: bool, gted: Option<f64>, beq: bool) -> ComparisonRecord {
        ComparisonRecord {
            model: model.into(),
            problem_id: pid.into(),
            compiled,
            gted,
            beq,
        }
    }

    #[test]
    fn fold_by_hand() {
        let recs = vec![
            rec("m", "p1", true, Some(1.0), true),
            rec("m", "p2", true, Some(0.5), false),
            rec("m", "p3", false, Some(0.8), true),
            rec("m", "p4", true, None, false),
        ];
        let rows = aggregate_records(&recs, 0.9).unwrap();
        let r = &rows[0];
        assert_eq!((r.beq_count, r.gted_above_threshold, r.compile_success, r.denominator, r.gold_missing), (1, 1, 3, 4, 1));
        // p3 did not compile: scores 0 and its BEq pass does not count
        assert!((r.gted_mean - 0.5).abs() < 1e-12);
        assert!((r.gted_mean_compiled - 0.75).abs() < 1e-12);
        assert_eq!(aggregate_records(&recs, 1.0).unwrap()[0].gted_above_threshold, 0);
    }

    #[test]
    fn zero_valid_candidates() {
        let recs = vec![rec("z", "p1", false, Some(0.9), false), rec("z", "p2", false, Some(0.3), false)];
        let r = &aggregate_records(&recs, 0.9).unwrap()[0];
        assert_eq!((r.compile_success, r.gted_mean, r.gted_mean_compiled), (0, 0.0, 0.0));
        assert_eq!(r.compile_percent(), "0.0%");
    }

    #[test]
    fn denominators_must_agree() {
        let recs = vec![rec("a", "p1", true, None, false), rec("b", "p1", true, None, false), rec("b", "p2", true, None, false)];
        assert!(matches!(aggregate_records(&recs, 0.9), Err(MetricsError::Input(_))));
        let dup = vec![rec("a", "p1", true, None, false), rec("a", "p1", true, None, false)];
        assert!(aggregate_records(&dup, 0.9).is_err());
    }

    fn row(model: &str, beq: usize) -> MetricsRow {
        MetricsRow {
            model: model.into(),
            beq_count: beq,
            gted_mean: 0.5,
            gted_above_threshold: 1,
            compile_success: 2,
            denominator: 3,
            gted_mean_compiled: 0.75,
            gold_missing: 0,
        }
    }

    #[test]
    fn csv_is_stable_and_markdown_sorts() {
        let rows = vec![row("b", 1), row("a", 7), row("c", 7)];
        let csv = render_csv(&rows[..1]);
        assert_eq!(csv, format!("{CSV_HEADER}\nb,1,0.50,1,2,3,0.75,0\n"));
        assert_eq!(csv, render_csv(&rows[..1]));
        let md = render_markdown(&rows);
        let order: Vec<&str> = md.lines().skip(2).map(|l| l.split('|').nth(1).unwrap().trim()).collect();
        assert_eq!(order, ["a", "c", "b"]);
        assert_eq!(render_csv(&[row("x, y", 0)]).lines().nth(1).unwrap(), "\"x, y\",0,0.50,1,2,3,0.75,0");
    }

    #[test]
    fn heatmap_columns() {
        let recs = vec![
            rec("m", "p1", true, Some(1.0), false),
            rec("m", "p2", true, Some(0.6), false),
            rec("m", "p3", false, Some(0.95), false),
            rec("m", "p4", true, Some(0.9), false),
        ];
        let h = heatmap(&recs, &[0.5, 0.9]);
        assert_eq!(h[0].fractions, vec![0.75, 0.5]);
        let csv = render_heatmap_csv(&[0.5, 0.9], &h);
        assert_eq!(csv, "model,ge_0.5,ge_0.9\nm,0.750,0.500\n");
    }

    #[test]
    fn coverage_counts_problems_any_model_passed() {
        let recs = vec![
            rec("a", "p1", true, None, true),
            rec("b", "p1", true, None, true),
            rec("a", "p2", false, None, true),
            rec("b", "p3", true, None, false),
        ];
        assert_eq!(beq_coverage(&recs), (1, 3));
    }

    #[test]
    fn emit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let recs = vec![rec("m", "p1", true, Some(1.0), true)];
        let report = Report::build(&recs, 0.9, &[0.5, 0.9]).unwrap();
        let out = dir.path().join("t2.csv");
        report.emit(ReportFormat::Csv, &out).unwrap();
        assert!(std::fs::read_to_string(&out).unwrap().starts_with(CSV_HEADER));
        assert!(dir.path().join("t2.heatmap.csv").exists());
        let json = report.render(ReportFormat::Json);
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        let bad = dir.path().join("missing/dir/r.csv");
        assert!(matches!(report.emit(ReportFormat::Csv, &bad), Err(MetricsError::Io(_))));
    }

    fn cand(pid: &str, status: FinalStatus, code: &str) -> Candidate {
        Candidate {
            problem_id: pid.into(),
            model: "m".into(),
            iterations: vec![IterationRecord {
                index: 1,
                code: code.into(),
                validation: ValidationResult::from_log(code, String::new(), 0.0),
                feedback: String::new(),
            }],
            final_status: status,
            final_code: code.into(),
        }
    }

    #[test]
    fn candidates_scored_against_gold() {
        let gold: BTreeMap<String, OpTree> = [
            ("p1".to_string(), parse_optree("theorem g (n : ℕ) : n + 0 = n := sorry").unwrap()),
            ("p2".to_string(), parse_optree("theorem g : (2 : ℕ) ∣ 4 := sorry").unwrap()),
        ]
        .into();
        let cands: BTreeMap<String, Vec<Candidate>> = [(
            "m".to_string(),
            vec![
                cand("p1", FinalStatus::Valid, "theorem c (k : ℕ) : k + 0 = k := by sorry"),
                cand("p2", FinalStatus::Invalid, "theorem c : (2 : ℕ) ∣ 4 := by sorry"),
                cand("p3", FinalStatus::Valid, "theorem c : True := by sorry"),
            ],
        )]
        .into();
        let beq = [(("m".to_string(), "p1".to_string()), true)].into();
        let rows = aggregate_rows(&cands, &gold, &beq, 0.9).unwrap();
        let r = &rows[0];
        assert_eq!((r.beq_count, r.compile_success, r.gted_above_threshold, r.gold_missing), (1, 2, 1, 1));
        assert!((r.gted_mean - 0.5).abs() < 1e-12);
    }
}
