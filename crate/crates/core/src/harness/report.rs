use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::experiment::ResultsTable;
use super::HarnessError;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const TRIALS_FILE: &str = "trials.jsonl";
pub const TABLE_FILE: &str = "table.txt";

#[derive(Serialize)]
struct CsvRow<'a> {
    variant: &'a str,
    #[serde(rename = "stepRatio")]
    step_ratio: String,
    #[serde(rename = "timeRatio")]
    time_ratio: String,
    #[serde(rename = "absSteps")]
    abs_steps: String,
    #[serde(rename = "absTime")]
    abs_time: String,
    failures: usize,
}

fn non_empty(results: &ResultsTable) -> Result<(), HarnessError> {
    if results.summary.is_empty() || results.trials.is_empty() {
        return Err(HarnessError::Precondition("results are empty".into()));
    }
    Ok(())
}

/// Summary CSV: variant, stepRatio, timeRatio, absSteps, absTime, failures.
pub fn summary_csv(results: &ResultsTable) -> Result<String, HarnessError> {
    non_empty(results)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &results.summary {
        w.serialize(CsvRow {
            variant: &s.variant,
            step_ratio: format!("{:.4}", s.step_ratio),
            time_ratio: format!("{:.4}", s.time_ratio),
            abs_steps: format!("{:.2}", s.abs_steps),
            abs_time: format!("{:.4}", s.abs_time),
            failures: s.failures,
        })
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
}

/// One JSON object per episode.
pub fn trials_jsonl(results: &ResultsTable) -> Result<String, HarnessError> {
    non_empty(results)?;
    let mut out = String::new();
    for r in &results.trials {
        out.push_str(&serde_json::to_string(r).map_err(|e| HarnessError::Io(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// Plain-text table with steps and time as fractions of the reference and
/// the reference's absolute means underneath.
pub fn text_table(results: &ResultsTable) -> Result<String, HarnessError> {
    non_empty(results)?;
    let width = results.summary.iter().map(|s| s.variant.len()).max().unwrap_or(0).max(7);
    let mut out = String::new();
    let trials = results.trials.len() / results.summary.len();
    let _ = writeln!(out, "{} ({} paired trials, reference {})", results.exp, trials, results.reference);
    let _ = writeln!(out, "{:width$}  {:>7}  {:>7}  {:>9}", "variant", "steps", "time", "failures");
    for s in &results.summary {
        let _ = writeln!(
            out,
            "{:width$}  {:>7.2}  {:>7.2}  {:>9}",
            s.variant, s.step_ratio, s.time_ratio, s.failures
        );
    }
    if let Some(r) = results.variant(&results.reference) {
        let _ = writeln!(
            out,
            "reference means: {:.1} steps, {:.3} s compute time",
            r.abs_steps, r.abs_time
        );
    }
    Ok(out)
}

/// Writes the summary CSV, the raw trial JSONL and the text table into
/// `dir`, creating it if needed.
pub fn write_report(results: &ResultsTable, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let files = [
        (SUMMARY_FILE, summary_csv(results)?),
        (TRIALS_FILE, trials_jsonl(results)?),
        (TABLE_FILE, text_table(results)?),
    ];
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
        paths.push(p);
    }
    Ok(paths)
}
