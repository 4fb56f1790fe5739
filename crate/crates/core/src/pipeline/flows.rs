use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::corpus::CorpusEntry;
use super::seeds::{derive_seed, item_rng};
use crate::audio::{load_wav, resample, DATASET_SAMPLE_RATE};
use crate::bayesopt::{run_p2p_study, run_zeta_study, GeneratorBackend, StudyConfig, TrialRecord};
use crate::error::{Error, Result};
use crate::manifest::{append_record, now_unix_ms, read_manifest_lenient, store_audio, Method, TripletRecord};
use crate::metrics::Embedder;
use crate::prompts::{
    candidate_search, filter_by_elements, generate_prompt_triplet, CandidateSearch, CandidateSearchConfig, JudgeClient,
    LlmClient, PromptTriplet, RetryPolicy,
};

/// Writes one JSON value per line, replacing `path`.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
    for it in items {
        let line = serde_json::to_string(it).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(f, "{line}").map_err(|e| Error::io(&tmp, e))?;
    }
    f.flush().map_err(|e| Error::io(&tmp, e))?;
    drop(f);
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

/// A prompt triplet and the corpus clip its input caption came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip: Option<PathBuf>,
    pub triplet: PromptTriplet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemFailure {
    pub index: usize,
    pub subject: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PromptSummary {
    pub kept: Vec<PromptEntry>,
    pub rejected: Vec<PromptEntry>,
    pub failures: Vec<ItemFailure>,
}

/// Turns each corpus caption into a triplet and drops those with too many
/// sound sources. Per-caption client errors are collected, not fatal.
pub fn generate_prompts(corpus: &[CorpusEntry], source_dataset: &str, llm: &dyn LlmClient, policy: RetryPolicy) -> PromptSummary {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (index, e) in corpus.iter().enumerate() {
        match generate_prompt_triplet(&e.caption, source_dataset, llm, policy) {
            Ok(t) => ok.push((e.clip.clone(), t)),
            Err(err) => failures.push(ItemFailure { index, subject: e.caption.clone(), reason: err.to_string() }),
        }
    }
    let (clips, triplets): (Vec<PathBuf>, Vec<PromptTriplet>) = ok.into_iter().unzip();
    let (kept, rejected) = filter_by_elements(triplets.clone());
    // The filter is a stable partition, so walking the inputs in order
    // recovers each triplet's clip.
    let (mut k, mut r) = (kept.into_iter().peekable(), rejected.into_iter().peekable());
    let (mut kept, mut rejected) = (Vec::new(), Vec::new());
    for (clip, t) in clips.into_iter().zip(&triplets) {
        let entry = |t| PromptEntry { clip: Some(clip.clone()), triplet: t };
        if k.peek() == Some(t) {
            kept.push(entry(k.next().expect("peeked")));
        } else if let Some(t) = r.next() {
            rejected.push(entry(t));
        }
    }
    PromptSummary { kept, rejected, failures }
}

/// Outcome of candidate search for one prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub index: usize,
    pub prompt: PromptEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<CandidateSearch>,
    /// Why no candidate was chosen.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub const CANDIDATE_STAGE: &str = "candidates";
pub const P2P_STAGE: &str = "p2p";
pub const DDPM_STAGE: &str = "ddpm";

/// Runs candidate search per prompt, each with its own random stream.
pub fn run_candidate_search(
    prompts: &[PromptEntry],
    backend: &dyn GeneratorBackend,
    judge: &dyn JudgeClient,
    embedder: &dyn Embedder,
    config: &CandidateSearchConfig,
    seed: u64,
) -> Vec<CandidateEntry> {
    prompts
        .iter()
        .enumerate()
        .map(|(index, p)| {
            let mut rng = item_rng(seed, CANDIDATE_STAGE, index as u64);
            let outcome = candidate_search(&p.triplet, backend, judge, embedder, config, &mut rng);
            if let Err(e) = &outcome {
                log::info!("prompt {index} ({:?}): {e}", p.triplet.input_caption);
            }
            CandidateEntry {
                index,
                prompt: p.clone(),
                error: outcome.as_ref().err().map(|e| e.to_string()),
                search: outcome.ok(),
            }
        })
        .collect()
}

/// Full trial history of one study, kept beside the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyLog {
    pub record_id: String,
    pub method: Method,
    pub seed: u64,
    pub trials: Vec<TrialRecord>,
    pub best_index: usize,
    pub final_steps: u32,
    pub final_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StudySummary {
    pub written: usize,
    pub existing: usize,
    pub failures: Vec<ItemFailure>,
}

fn existing_ids(manifest: &Path) -> Result<HashSet<String>> {
    if manifest.exists() {
        Ok(read_manifest_lenient(manifest)?.0.into_iter().map(|(_, r)| r.id).collect())
    } else {
        Ok(HashSet::new())
    }
}

fn append_log(path: &Path, log: &StudyLog) -> Result<()> {
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
    let line = serde_json::to_string(log).map_err(|e| Error::Format(e.to_string()))?;
    writeln!(f, "{line}").map_err(|e| Error::io(path, e))
}

pub fn study_log_path(manifest: &Path) -> PathBuf {
    manifest.with_extension("studies.jsonl")
}

fn backends(generator: &dyn GeneratorBackend, embedder: &dyn Embedder) -> BTreeMap<String, String> {
    BTreeMap::from([("generator".to_string(), generator.name()), ("embedder".to_string(), embedder.name())])
}

/// Runs a parameter study per chosen candidate and appends the final pairs.
pub fn optimize_p2p(
    candidates: &[CandidateEntry],
    backend: &dyn GeneratorBackend,
    embedder: &dyn Embedder,
    config: &StudyConfig,
    manifest: &Path,
) -> Result<StudySummary> {
    config.validate()?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let existing = existing_ids(manifest)?;
    let mut summary = StudySummary::default();
    for c in candidates {
        let Some(search) = &c.search else { continue };
        let id = format!("p2p-{:016x}-{:06}", config.seed, c.index);
        if existing.contains(&id) {
            summary.existing += 1;
            continue;
        }
        let study_config = config.clone().with_seed(derive_seed(config.seed, P2P_STAGE, Some(c.index as u64)));
        let result = (|| -> Result<()> {
            let study = run_p2p_study(&c.prompt.triplet, &search.chosen, backend, embedder, &study_config)?;
            let (input, output) = &study.audio;
            let record = TripletRecord {
                id: id.clone(),
                input_wav: PathBuf::from("audio").join(store_audio(&dir.join("audio"), input)?),
                output_wav: PathBuf::from("audio").join(store_audio(&dir.join("audio"), output)?),
                instruction: c.prompt.triplet.edit_instruction.clone(),
                method: Method::P2p,
                task: None,
                edit_params: None,
                source_captions: vec![c.prompt.triplet.input_caption.clone()],
                prompt: Some(c.prompt.triplet.clone()),
                trial: Some(study.best().clone()),
                objective: Some(study.final_objective),
                backends: backends(backend, embedder),
                created_unix_ms: now_unix_ms(),
            };
            append_record(manifest, &record)?;
            append_log(
                &study_log_path(manifest),
                &StudyLog {
                    record_id: id.clone(),
                    method: Method::P2p,
                    seed: search.chosen.seed,
                    trials: study.trials.clone(),
                    best_index: study.best_index,
                    final_steps: study.final_steps,
                    final_objective: study.final_objective,
                },
            )
        })();
        match result {
            Ok(()) => summary.written += 1,
            Err(e) => summary.failures.push(ItemFailure {
                index: c.index,
                subject: c.prompt.triplet.input_caption.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(summary)
}

/// Runs an inversion-edit study per prompt on the prompt's source clip.
pub fn optimize_ddpm(
    prompts: &[PromptEntry],
    backend: &dyn GeneratorBackend,
    embedder: &dyn Embedder,
    config: &StudyConfig,
    manifest: &Path,
) -> Result<StudySummary> {
    config.validate()?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let existing = existing_ids(manifest)?;
    let mut summary = StudySummary::default();
    for (index, p) in prompts.iter().enumerate() {
        let id = format!("ddpm-{:016x}-{index:06}", config.seed);
        if existing.contains(&id) {
            summary.existing += 1;
            continue;
        }
        let seed = derive_seed(config.seed, DDPM_STAGE, Some(index as u64));
        let result = (|| -> Result<()> {
            let clip = p
                .clip
                .as_ref()
                .ok_or_else(|| Error::Validation("prompt has no source clip for inversion".into()))?;
            let raw = load_wav(clip)?;
            let input = if raw.sample_rate() == DATASET_SAMPLE_RATE { raw } else { resample(&raw, DATASET_SAMPLE_RATE) };
            let input = input.to_stereo();
            let study = run_zeta_study(&p.triplet, &input, backend, embedder, &config.clone().with_seed(seed))?;
            let record = TripletRecord {
                id: id.clone(),
                input_wav: PathBuf::from("audio").join(store_audio(&dir.join("audio"), &input)?),
                output_wav: PathBuf::from("audio").join(store_audio(&dir.join("audio"), &study.audio)?),
                instruction: p.triplet.edit_instruction.clone(),
                method: Method::Ddpm,
                task: None,
                edit_params: None,
                source_captions: vec![p.triplet.input_caption.clone()],
                prompt: Some(p.triplet.clone()),
                trial: Some(study.best().clone()),
                objective: Some(study.final_objective),
                backends: backends(backend, embedder),
                created_unix_ms: now_unix_ms(),
            };
            append_record(manifest, &record)?;
            append_log(
                &study_log_path(manifest),
                &StudyLog {
                    record_id: id.clone(),
                    method: Method::Ddpm,
                    seed,
                    trials: study.trials.clone(),
                    best_index: study.best_index,
                    final_steps: study.final_steps,
                    final_objective: study.final_objective,
                },
            )
        })();
        match result {
            Ok(()) => summary.written += 1,
            Err(e) => summary.failures.push(ItemFailure {
                index,
                subject: p.triplet.input_caption.clone(),
                reason: e.to_string(),
            }),
        }
    }
    Ok(summary)
}
