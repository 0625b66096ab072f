//! File emission: JSONL records, summary (CSV or JSONL), and the manifest.
//! Files are written to a temp name and renamed into place, so a failing run
//! never leaves a partial file under the final name.

use super::config::OutputFormat;
use super::record::{SampleRecord, SummaryRow, SUMMARY_CSV_HEADER};
use super::ExperimentOutput;
use crate::error::{Error, Result};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct EmittedFiles {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
}

/// Serialize records one JSON object per line, in sample order.
pub fn records_to_jsonl(records: &[SampleRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serialization is infallible"));
        out.push('\n');
    }
    out
}

fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line());
        out.push('\n');
    }
    out
}

fn summary_to_jsonl(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    for row in rows {
        out.push_str(&serde_json::to_string(row).expect("summary serialization is infallible"));
        out.push('\n');
    }
    out
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Write records, summary and manifest into `dir`.
pub fn emit(output: &ExperimentOutput, dir: &Path, format: OutputFormat) -> Result<EmittedFiles> {
    if dir.as_os_str().is_empty() {
        return Err(Error::Config("output directory must not be empty".into()));
    }
    if dir.exists() && !dir.is_dir() {
        return Err(Error::Config(format!(
            "output path {} exists and is not a directory",
            dir.display()
        )));
    }
    std::fs::create_dir_all(dir)?;
    let records = dir.join("records.jsonl");
    write_atomic(&records, &records_to_jsonl(&output.records))?;
    let (summary, summary_text) = match format {
        OutputFormat::Csv => (dir.join("summary.csv"), summary_to_csv(&output.summary)),
        OutputFormat::Jsonl => (dir.join("summary.jsonl"), summary_to_jsonl(&output.summary)),
    };
    write_atomic(&summary, &summary_text)?;
    let mut manifest = output.manifest.clone();
    manifest.records_file = Some("records.jsonl".to_string());
    manifest.summary_file =
        Some(summary.file_name().unwrap().to_string_lossy().into_owned());
    let manifest_path = dir.join("manifest.json");
    let mut manifest_text = serde_json::to_string_pretty(&manifest)?;
    manifest_text.push('\n');
    write_atomic(&manifest_path, &manifest_text)?;
    Ok(EmittedFiles { records, summary, manifest: manifest_path })
}

#[cfg(test)]
mod tests {
    use super::super::{run_experiment, ExperimentConfig, ExperimentKind};
    use super::*;

    #[test]
    fn emits_all_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::Connectivity, 2, vec![2]);
        cfg.samples = 16;
        let out = run_experiment(&cfg).unwrap();
        let files = emit(&out, dir.path(), OutputFormat::Csv).unwrap();
        let records = std::fs::read_to_string(&files.records).unwrap();
        assert_eq!(records.lines().count(), 16);
        let summary = std::fs::read_to_string(&files.summary).unwrap();
        assert!(summary.starts_with("kind,n,k,samples,"));
        assert_eq!(summary.lines().count(), 2);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&files.manifest).unwrap()).unwrap();
        assert_eq!(manifest["config"]["kind"], "connectivity");
        assert_eq!(manifest["records_file"], "records.jsonl");
    }

    #[test]
    fn refuses_file_as_directory() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("occupied");
        std::fs::write(&blocker, "x").unwrap();
        let mut cfg = ExperimentConfig::new(ExperimentKind::Connectivity, 2, vec![2]);
        cfg.samples = 2;
        let out = run_experiment(&cfg).unwrap();
        let err = emit(&out, &blocker, OutputFormat::Csv);
        assert!(err.is_err());
        // Nothing partial appears under the blocker path.
        assert_eq!(std::fs::read_to_string(&blocker).unwrap(), "x");
    }
}
