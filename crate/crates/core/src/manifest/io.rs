use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use super::record::TripletRecord;
use super::verify::check_record_files;
use crate::error::{Error, Result};

/// Drops a trailing line left without its newline by an interrupted write.
/// Returns the number of bytes removed. The caller must hold the lock.
pub(crate) fn truncate_partial_tail(file: &mut File, path: &Path) -> Result<u64> {
    let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
    if len == 0 {
        return Ok(0);
    }
    let mut last = [0u8];
    file.seek(SeekFrom::Start(len - 1)).map_err(|e| Error::io(path, e))?;
    file.read_exact(&mut last).map_err(|e| Error::io(path, e))?;
    if last[0] == b'\n' {
        return Ok(0);
    }
    // Scan backwards in blocks for the previous newline.
    let mut end = len;
    let mut keep = 0;
    let mut buf = vec![0u8; 8192];
    while end > 0 {
        let start = end.saturating_sub(buf.len() as u64);
        let n = (end - start) as usize;
        file.seek(SeekFrom::Start(start)).map_err(|e| Error::io(path, e))?;
        file.read_exact(&mut buf[..n]).map_err(|e| Error::io(path, e))?;
        if let Some(i) = buf[..n].iter().rposition(|&b| b == b'\n') {
            keep = start + i as u64 + 1;
            break;
        }
        end = start;
    }
    file.set_len(keep).map_err(|e| Error::io(path, e))?;
    log::warn!("{}: dropped {} bytes of partial record", path.display(), len - keep);
    Ok(len - keep)
}

/// Appends one record as a single JSON line under an exclusive file lock.
///
/// The record is validated first, including its WAV files relative to the
/// manifest directory. A partial last line from an earlier crash is
/// removed before writing.
pub fn append_record(manifest: &Path, record: &TripletRecord) -> Result<()> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut problems = record.structural_problems();
    problems.extend(check_record_files(record, base).into_iter().map(|(check, detail)| format!("{check}: {detail}")));
    if !problems.is_empty() {
        return Err(Error::Validation(format!("record {:?} rejected: {}", record.id, problems.join("; "))));
    }
    let mut line = serde_json::to_string(record).map_err(|e| Error::Format(e.to_string()))?;
    line.push('\n');

    let mut file = OpenOptions::new()
        .read(true)
        .write(true)
        .create(true)
        .truncate(false)
        .open(manifest)
        .map_err(|e| Error::io(manifest, e))?;
    file.lock().map_err(|e| Error::io(manifest, e))?;
    let result = (|| {
        truncate_partial_tail(&mut file, manifest)?;
        file.seek(SeekFrom::End(0)).map_err(|e| Error::io(manifest, e))?;
        file.write_all(line.as_bytes()).map_err(|e| Error::io(manifest, e))?;
        file.sync_data().map_err(|e| Error::io(manifest, e))
    })();
    let _ = file.unlock();
    result
}

/// Repairs a manifest left with a partial last line. Returns bytes removed.
pub fn recover_manifest(manifest: &Path) -> Result<u64> {
    let mut file = OpenOptions::new()
        .read(true)
        .write(true)
        .open(manifest)
        .map_err(|e| Error::io(manifest, e))?;
    file.lock().map_err(|e| Error::io(manifest, e))?;
    let r = truncate_partial_tail(&mut file, manifest);
    let _ = file.unlock();
    r
}

/// A manifest line that did not parse.
#[derive(Debug, Clone, PartialEq)]
pub struct BadLine {
    /// One-based line number.
    pub line: usize,
    pub error: String,
}

/// Parses every line, collecting failures instead of stopping.
pub fn read_manifest_lenient(manifest: &Path) -> Result<(Vec<(usize, TripletRecord)>, Vec<BadLine>)> {
    let file = File::open(manifest).map_err(|e| Error::io(manifest, e))?;
    file.lock_shared().map_err(|e| Error::io(manifest, e))?;
    let mut records = Vec::new();
    let mut bad = Vec::new();
    for (i, line) in BufReader::new(&file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(manifest, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TripletRecord>(&line) {
            Ok(r) => records.push((i + 1, r)),
            Err(e) => bad.push(BadLine { line: i + 1, error: e.to_string() }),
        }
    }
    let _ = file.unlock();
    Ok((records, bad))
}

/// Parses a manifest, failing on the first malformed line.
pub fn read_manifest(manifest: &Path) -> Result<Vec<TripletRecord>> {
    let (records, bad) = read_manifest_lenient(manifest)?;
    if let Some(b) = bad.first() {
        return Err(Error::Format(format!("{} line {}: {}", manifest.display(), b.line, b.error)));
    }
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

/// Writes a whole manifest atomically (temp file then rename).
pub fn write_manifest(manifest: &Path, records: &[TripletRecord]) -> Result<()> {
    let tmp = manifest.with_extension("jsonl.tmp");
    {
        let mut f = std::io::BufWriter::new(File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
        for r in records {
            let line = serde_json::to_string(r).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(f, "{line}").map_err(|e| Error::io(&tmp, e))?;
        }
        f.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, manifest).map_err(|e| Error::io(manifest, e))
}
