use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::io::read_manifest;
use super::record::Method;
use crate::edits::EditTask;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ManifestStats {
    pub total: usize,
    pub by_method: BTreeMap<Method, usize>,
    pub by_task: BTreeMap<EditTask, usize>,
    /// Mean objective over records that carry one.
    pub mean_objective: Option<f64>,
    pub mean_instruction_words: f64,
}

pub fn manifest_stats(manifest: &Path) -> Result<ManifestStats> {
    let records = read_manifest(manifest)?;
    let mut s = ManifestStats { total: records.len(), ..Default::default() };
    let mut objectives = Vec::new();
    let mut words = 0usize;
    for r in &records {
        *s.by_method.entry(r.method).or_insert(0) += 1;
        if let Some(t) = r.task {
            *s.by_task.entry(t).or_insert(0) += 1;
        }
        objectives.extend(r.objective);
        words += r.instruction.split_whitespace().count();
    }
    s.mean_objective = (!objectives.is_empty()).then(|| objectives.iter().sum::<f64>() / objectives.len() as f64);
    s.mean_instruction_words = if records.is_empty() { 0.0 } else { words as f64 / records.len() as f64 };
    Ok(s)
}
