//! Fold per-problem comparison records into the per-model table, in every
//! output format, plus a threshold heatmap.

use std::path::PathBuf;

use proofforge::evalmetrics::{load_records, Report, ReportFormat, DEFAULT_THRESHOLD};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/model_table_records.jsonl"));
    let records = load_records(&path)?;
    let report = Report::build(&records, DEFAULT_THRESHOLD, &[0.5, 0.7, 0.9])?;
    for row in &report.rows {
        println!("{}: compile {} beq {}", row.model, row.compile_percent(), row.beq_percent());
    }
    print!("{}", report.render(ReportFormat::Csv));
    print!("{}", report.render(ReportFormat::Markdown));
    Ok(())
}
