use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One captioned source clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    #[serde(alias = "path", alias = "file")]
    pub clip: PathBuf,
    pub caption: String,
    /// Distinct sound sources, when annotated.
    #[serde(default, alias = "elements")]
    pub element_count: Option<u32>,
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format(format!("{}: {e}", path.display()))
}

/// Reads a corpus from CSV (header with `clip`, `caption` and optionally
/// `element_count`), a JSON array, or JSON lines, chosen by extension.
/// Relative clip paths are resolved against the corpus file's directory.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let mut entries: Vec<CorpusEntry> = match ext.as_str() {
        "csv" => {
            let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
            reader.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| parse_err(path, e))?
        }
        "json" => serde_json::from_str(&text).map_err(|e| parse_err(path, e))?,
        "jsonl" | "ndjson" => text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|e| parse_err(path, format!("line {}: {e}", i + 1))))
            .collect::<Result<_>>()?,
        other => return Err(Error::Config(format!("unsupported corpus format {other:?} (csv, json or jsonl)"))),
    };
    let base = path.parent().unwrap_or(Path::new("."));
    for e in &mut entries {
        if e.caption.trim().is_empty() {
            return Err(parse_err(path, format!("clip {} has an empty caption", e.clip.display())));
        }
        if e.clip.is_relative() {
            e.clip = base.join(&e.clip);
        }
    }
    Ok(entries)
}

/// A split manifest: one clip path per line, `#` starts a comment.
/// Relative paths resolve against the split file's directory.
pub fn load_split(path: &Path) -> Result<BTreeSet<PathBuf>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| base.join(l))
        .collect())
}

/// Keeps the corpus entries whose clip is in `split`.
pub fn apply_split(entries: Vec<CorpusEntry>, split: &BTreeSet<PathBuf>) -> Vec<CorpusEntry> {
    entries.into_iter().filter(|e| split.contains(&e.clip)).collect()
}

/// Fails if two method splits share a clip.
pub fn check_disjoint(a: &BTreeSet<PathBuf>, b: &BTreeSet<PathBuf>) -> Result<()> {
    match a.intersection(b).next() {
        Some(shared) => Err(Error::Validation(format!(
            "splits overlap ({} shared clips, e.g. {})",
            a.intersection(b).count(),
            shared.display()
        ))),
        None => Ok(()),
    }
}
