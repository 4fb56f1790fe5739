//! Dataset-level evaluation of edited clips against one or two reference sets.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::audio::{load_wav, AudioClip};
use crate::error::{Error, Result};
use crate::manifest::{read_manifest, TripletRecord};
use crate::metrics::{
    clap_out, collect_stats, frechet_distance, inception_score, kl_divergence, lsd, mr_stft_loss, ms_mel_loss, si_sdr,
    si_snr, stft_loss, Classifier, Embedder, StftConfig,
};

pub const REFERENCE_COLUMNS: [&str; 5] = ["FD", "LSD", "KL", "IS", "CLAP"];
pub const SIGNAL_COLUMNS: [&str; 5] = ["STFT", "MR-STFT", "MR-MEL", "SI-SDR", "SI-SNR"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceMode {
    Original,
    Regenerated,
}

impl ReferenceMode {
    pub fn name(self) -> &'static str {
        match self {
            ReferenceMode::Original => "original",
            ReferenceMode::Regenerated => "regenerated",
        }
    }
}

/// A metric value, or the marker for one that could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Value(f64),
    Unavailable(Unavailable),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unavailable {
    Unavailable,
}

impl Cell {
    pub const UNAVAILABLE: Cell = Cell::Unavailable(Unavailable::Unavailable);

    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Unavailable(_) => None,
        }
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Value(v) => write!(f, "{v:.4}"),
            Cell::Unavailable(_) => f.write_str("unavailable"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub reference: ReferenceMode,
    pub values: BTreeMap<String, Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalRow {
    pub reference: ReferenceMode,
    /// Records whose task is deterministic.
    pub count: usize,
    pub values: BTreeMap<String, Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTable {
    pub samples: usize,
    pub columns: Vec<String>,
    pub rows: Vec<EvalRow>,
    pub signal_columns: Vec<String>,
    pub signal_rows: Vec<SignalRow>,
    /// Conventions used and reasons for unavailable cells.
    pub notes: Vec<String>,
}

impl EvalTable {
    pub fn row(&self, reference: ReferenceMode) -> Option<&EvalRow> {
        self.rows.iter().find(|r| r.reference == reference)
    }

    /// Plain-text rendering, one row per reference.
    pub fn to_text(&self) -> String {
        let mut out = format!("{:<12}", "reference");
        for c in &self.columns {
            out += &format!(" {c:>12}");
        }
        out.push('\n');
        for r in &self.rows {
            out += &format!("{:<12}", r.reference.name());
            for c in &self.columns {
                out += &format!(" {:>12}", r.values[c].to_string());
            }
            out.push('\n');
        }
        if self.signal_rows.iter().any(|r| r.count > 0) {
            out += &format!("\n{:<12}", "signal");
            for c in &self.signal_columns {
                out += &format!(" {c:>12}");
            }
            out.push('\n');
            for r in &self.signal_rows {
                out += &format!("{:<12}", r.reference.name());
                for c in &self.signal_columns {
                    out += &format!(" {:>12}", r.values[c].to_string());
                }
                out.push('\n');
            }
        }
        out
    }
}

/// One evaluated output with its matched reference clips.
pub struct EvalItem {
    pub id: String,
    pub caption: String,
    pub deterministic: bool,
    pub output: AudioClip,
    pub references: BTreeMap<ReferenceMode, AudioClip>,
}

#[derive(Default, Clone, Copy)]
pub struct Backends<'a> {
    pub classifier: Option<&'a dyn Classifier>,
    pub embedder: Option<&'a dyn Embedder>,
}

fn caption_of(r: &TripletRecord) -> String {
    r.prompt.as_ref().map(|p| p.output_caption.clone()).unwrap_or_else(|| r.instruction.clone())
}

/// Loads outputs from `edited` and, per reference mode, the output clip of
/// the reference record with the same id.
pub fn load_items(edited: &Path, references: &BTreeMap<ReferenceMode, &Path>) -> Result<Vec<EvalItem>> {
    let base = edited.parent().unwrap_or(Path::new("."));
    let mut refs: BTreeMap<ReferenceMode, (std::path::PathBuf, BTreeMap<String, TripletRecord>)> = BTreeMap::new();
    for (&mode, path) in references {
        let dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        let map = read_manifest(path)?.into_iter().map(|r| (r.id.clone(), r)).collect();
        refs.insert(mode, (dir, map));
    }
    read_manifest(edited)?
        .into_iter()
        .map(|r| {
            let mut clips = BTreeMap::new();
            for (&mode, (dir, map)) in &refs {
                let rr = map.get(&r.id).ok_or_else(|| {
                    Error::Validation(format!("{} reference lacks record {}", mode.name(), r.id))
                })?;
                clips.insert(mode, load_wav(rr.resolve(dir).1)?);
            }
            Ok(EvalItem {
                id: r.id.clone(),
                caption: caption_of(&r),
                deterministic: r.task.is_some_and(|t| t.is_deterministic()),
                output: load_wav(r.resolve(base).1)?,
                references: clips,
            })
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn paired(
    items: &[EvalItem],
    mode: ReferenceMode,
    f: impl Fn(&AudioClip, &AudioClip) -> Result<f64>,
) -> Result<f64> {
    let v = items
        .iter()
        .map(|it| f(&it.references[&mode], &it.output).map_err(|e| Error::Incompatible(format!("{}: {e}", it.id))))
        .collect::<Result<Vec<_>>>()?;
    Ok(mean(&v))
}

/// Computes the reference table and the signal table for deterministic tasks.
///
/// Metrics needing a missing backend are marked unavailable, as are set
/// statistics with too few samples; the reason is added to the notes.
pub fn evaluate(items: &[EvalItem], modes: &[ReferenceMode], backends: Backends<'_>, stft: &StftConfig) -> Result<EvalTable> {
    if modes.is_empty() {
        return Err(Error::Config("at least one reference set is required".into()));
    }
    if let Some(it) = items.iter().find(|it| modes.iter().any(|m| !it.references.contains_key(m))) {
        return Err(Error::Validation(format!("record {} lacks a reference clip", it.id)));
    }
    let mut notes = vec!["KL uses softmax class probabilities of the classifier".to_string()];
    let mut note = |s: String| {
        if !notes.contains(&s) {
            notes.push(s);
        }
    };
    if items.is_empty() {
        note("no records to evaluate".into());
    }
    let outputs: Vec<&AudioClip> = items.iter().map(|i| &i.output).collect();
    let out_probs = match backends.classifier {
        Some(c) if !items.is_empty() => Some(outputs.iter().map(|a| c.class_probabilities(a)).collect::<Result<Vec<_>>>()?),
        _ => None,
    };
    if backends.classifier.is_none() {
        note("FD, KL and IS need a classifier backend".into());
    }
    if backends.embedder.is_none() {
        note("CLAP needs an embedder backend".into());
    }
    let is = match &out_probs {
        Some(p) if p.len() >= 2 => Cell::Value(inception_score(p)?),
        Some(_) => {
            note("IS and FD need at least two records".into());
            Cell::UNAVAILABLE
        }
        None => Cell::UNAVAILABLE,
    };
    let clap = match backends.embedder {
        Some(e) if !items.is_empty() => {
            let v = items.iter().map(|it| clap_out(&it.output, &it.caption, e)).collect::<Result<Vec<_>>>()?;
            Cell::Value(mean(&v))
        }
        _ => Cell::UNAVAILABLE,
    };

    let mut rows = Vec::new();
    let mut signal_rows = Vec::new();
    for &mode in modes {
        let mut values = BTreeMap::new();
        let refs: Vec<&AudioClip> = items.iter().map(|i| &i.references[&mode]).collect();
        let (fd, kl) = match (backends.classifier, &out_probs) {
            (Some(c), Some(op)) => {
                let ref_probs = refs.iter().map(|a| c.class_probabilities(a)).collect::<Result<Vec<_>>>()?;
                let pairs: Vec<(Vec<f64>, Vec<f64>)> = ref_probs.into_iter().zip(op.iter().cloned()).collect();
                let kl = Cell::Value(kl_divergence(&pairs)?);
                let fd = if items.len() >= 2 {
                    let a = collect_stats(&refs.iter().map(|c| (*c).clone()).collect::<Vec<_>>(), |x| c.features(x))?;
                    let b = collect_stats(&outputs.iter().map(|c| (*c).clone()).collect::<Vec<_>>(), |x| c.features(x))?;
                    Cell::Value(frechet_distance(&a, &b)?)
                } else {
                    Cell::UNAVAILABLE
                };
                (fd, kl)
            }
            _ => (Cell::UNAVAILABLE, Cell::UNAVAILABLE),
        };
        let lsd_cell = if items.is_empty() {
            Cell::UNAVAILABLE
        } else {
            Cell::Value(paired(items, mode, |r, e| lsd(r, e, stft).map(|m| m.value))?)
        };
        values.insert("FD".to_string(), fd);
        values.insert("LSD".to_string(), lsd_cell);
        values.insert("KL".to_string(), kl);
        values.insert("IS".to_string(), is);
        values.insert("CLAP".to_string(), clap);
        rows.push(EvalRow { reference: mode, values });

        let det: Vec<&EvalItem> = items.iter().filter(|i| i.deterministic).collect();
        let det_items: Vec<EvalItem> = det
            .iter()
            .map(|i| EvalItem {
                id: i.id.clone(),
                caption: i.caption.clone(),
                deterministic: true,
                output: i.output.clone(),
                references: BTreeMap::from([(mode, i.references[&mode].clone())]),
            })
            .collect();
        let mut sig = BTreeMap::new();
        type Metric = fn(&AudioClip, &AudioClip, &StftConfig) -> Result<f64>;
        let metrics: [(&str, Metric); 5] = [
            ("STFT", |r, e, c| stft_loss(r, e, c).map(|m| m.value)),
            ("MR-STFT", |r, e, c| mr_stft_loss(r, e, c).map(|m| m.value)),
            ("MR-MEL", |r, e, c| ms_mel_loss(r, e, c).map(|m| m.value)),
            ("SI-SDR", |r, e, _| si_sdr(r, e).map(|m| m.value)),
            ("SI-SNR", |r, e, _| si_snr(r, e).map(|m| m.value)),
        ];
        for (name, f) in metrics {
            let cell = if det_items.is_empty() {
                Cell::UNAVAILABLE
            } else {
                Cell::Value(paired(&det_items, mode, |r, e| f(r, e, stft))?)
            };
            sig.insert(name.to_string(), cell);
        }
        signal_rows.push(SignalRow { reference: mode, count: det_items.len(), values: sig });
    }
    if signal_rows.iter().all(|r| r.count == 0) {
        note("signal metrics need records with deterministic tasks".into());
    }
    Ok(EvalTable {
        samples: items.len(),
        columns: REFERENCE_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
        signal_columns: SIGNAL_COLUMNS.iter().map(|s| s.to_string()).collect(),
        signal_rows,
        notes,
    })
}
