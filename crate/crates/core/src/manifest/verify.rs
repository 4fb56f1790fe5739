use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::read_manifest_lenient;
use super::record::TripletRecord;
use crate::audio::{probe_wav, DATASET_CHANNELS, DATASET_SAMPLE_RATE};
use crate::edits::MAX_OUTPUT_SECONDS;
use crate::error::Result;

pub const CHECK_PARSE: &str = "parse";
pub const CHECK_UNIQUE_ID: &str = "unique id";
pub const CHECK_FIELDS: &str = "fields";
pub const CHECK_PROVENANCE: &str = "provenance";
pub const CHECK_READABLE: &str = "wav readable";
pub const CHECK_FORMAT: &str = "44.1 kHz stereo";
pub const CHECK_DURATION: &str = "duration cap";

/// `(check, detail)` pairs for the WAV files a record points at.
pub fn check_record_files(record: &TripletRecord, base_dir: &Path) -> Vec<(&'static str, String)> {
    let mut out = Vec::new();
    let (input, output) = record.resolve(base_dir);
    for (role, path) in [("input", input), ("output", output)] {
        match probe_wav(&path) {
            Err(e) => out.push((CHECK_READABLE, format!("{role} {}: {e}", path.display()))),
            Ok(info) => {
                if info.sample_rate != DATASET_SAMPLE_RATE || info.channels != DATASET_CHANNELS {
                    out.push((
                        CHECK_FORMAT,
                        format!("{role} is {} Hz with {} channels", info.sample_rate, info.channels),
                    ));
                }
                if info.duration_seconds() > MAX_OUTPUT_SECONDS + 1e-9 {
                    out.push((
                        CHECK_DURATION,
                        format!("{role} lasts {:.2} s > {MAX_OUTPUT_SECONDS} s", info.duration_seconds()),
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrityFailure {
    pub line: usize,
    pub id: Option<String>,
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegrityReport {
    /// Non-empty manifest lines.
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    /// Failing-record count per check.
    pub by_check: BTreeMap<String, usize>,
    pub failures: Vec<IntegrityFailure>,
}

impl IntegrityReport {
    pub fn is_clean(&self) -> bool {
        self.failed == 0
    }

    /// Whether a record on `line` failed `check`.
    pub fn flagged(&self, line: usize, check: &str) -> bool {
        self.failures.iter().any(|f| f.line == line && f.check == check)
    }
}

/// Runs every per-record check over a manifest.
pub fn verify(manifest: &Path) -> Result<IntegrityReport> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let (records, bad) = read_manifest_lenient(manifest)?;
    let mut report = IntegrityReport { total: records.len() + bad.len(), ..Default::default() };
    let mut failing_lines = HashSet::new();
    let mut add = |report: &mut IntegrityReport, f: IntegrityFailure| {
        failing_lines.insert(f.line);
        report.failures.push(f);
    };
    for b in bad {
        add(&mut report, IntegrityFailure { line: b.line, id: None, check: CHECK_PARSE.into(), detail: b.error });
    }
    let mut seen = HashSet::new();
    for (line, r) in &records {
        let fail = |check: &str, detail: String| IntegrityFailure {
            line: *line,
            id: Some(r.id.clone()),
            check: check.into(),
            detail,
        };
        if !seen.insert(r.id.clone()) {
            add(&mut report, fail(CHECK_UNIQUE_ID, format!("id {:?} repeats", r.id)));
        }
        for p in r.structural_problems() {
            let check = if p.starts_with("provenance") { CHECK_PROVENANCE } else { CHECK_FIELDS };
            add(&mut report, fail(check, p));
        }
        for (check, detail) in check_record_files(r, base) {
            add(&mut report, fail(check, detail));
        }
    }
    report.failures.sort_by_key(|f| f.line);
    for f in &report.failures {
        let lines: HashSet<usize> =
            report.failures.iter().filter(|g| g.check == f.check).map(|g| g.line).collect();
        report.by_check.insert(f.check.clone(), lines.len());
    }
    report.failed = failing_lines.len();
    report.passed = report.total - report.failed;
    Ok(report)
}
