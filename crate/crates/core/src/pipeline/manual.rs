use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::corpus::CorpusEntry;
use super::seeds::item_rng;
use crate::audio::{load_wav, probe_wav, resample, AudioClip, DATASET_SAMPLE_RATE};
use crate::edits::{
    apply, sample_params, sample_task, single_element_slots, validate_constraints, EditTask, MAX_OUTPUT_SECONDS,
};
use crate::error::{ConstraintError, Error, Result};
use crate::manifest::{append_record, now_unix_ms, read_manifest_lenient, store_audio, Method, TripletRecord};
use crate::prompts::{generate_instruction, LlmClient};

pub const MANUAL_STAGE: &str = "manual";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManualOptions {
    pub count: usize,
    pub seed: u64,
    /// Random input draws tried before a sample is skipped.
    pub selection_attempts: usize,
}

impl ManualOptions {
    pub fn new(count: usize, seed: u64) -> Self {
        Self { count, seed, selection_attempts: 32 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleIssue {
    pub index: usize,
    pub task: EditTask,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ManualSummary {
    pub requested: usize,
    pub written: usize,
    /// Samples whose id was already in the manifest.
    pub existing: usize,
    /// No corpus inputs satisfied the task's constraints.
    pub skipped: Vec<SampleIssue>,
    /// Loading, editing, instruction or storage errors.
    pub failed: Vec<SampleIssue>,
    /// Task name -> samples drawn, including skipped ones.
    pub tasks: BTreeMap<String, usize>,
    pub elapsed_seconds: f64,
}

impl ManualSummary {
    pub fn seconds_per_written_sample(&self) -> Option<f64> {
        (self.written > 0).then(|| self.elapsed_seconds / self.written as f64)
    }
}

pub fn manual_record_id(seed: u64, index: usize) -> String {
    format!("manual-{seed:016x}-{index:06}")
}

/// Corpus entries with known durations, plus a bounded clip cache.
struct Pool<'a> {
    entries: Vec<(&'a CorpusEntry, f64)>,
    cache: HashMap<usize, AudioClip>,
}

const CACHE_LIMIT: usize = 512;

impl<'a> Pool<'a> {
    fn new(corpus: &'a [CorpusEntry]) -> Self {
        let entries = corpus
            .iter()
            .filter_map(|e| match probe_wav(&e.clip) {
                Ok(info) if info.frames > 0 => Some((e, info.duration_seconds())),
                Ok(_) => {
                    log::warn!("{}: empty clip, excluded", e.clip.display());
                    None
                }
                Err(err) => {
                    log::warn!("{}: unreadable, excluded ({err})", e.clip.display());
                    None
                }
            })
            .collect();
        Self { entries, cache: HashMap::new() }
    }

    fn load(&mut self, i: usize) -> Result<AudioClip> {
        if let Some(c) = self.cache.get(&i) {
            return Ok(c.clone());
        }
        let raw = load_wav(&self.entries[i].0.clip)?;
        let clip = if raw.sample_rate() == DATASET_SAMPLE_RATE { raw } else { resample(&raw, DATASET_SAMPLE_RATE) };
        let clip = clip.to_stereo();
        if self.cache.len() < CACHE_LIMIT {
            self.cache.insert(i, clip.clone());
        }
        Ok(clip)
    }

    /// Draws distinct inputs for `task` that satisfy its element and length
    /// constraints, judged on probed durations.
    fn select<R: Rng + ?Sized>(&self, task: EditTask, attempts: usize, rng: &mut R) -> Result<Vec<usize>, ConstraintError> {
        let arity = task.arity();
        let all: Vec<usize> = (0..self.entries.len()).collect();
        let single: Vec<usize> = all.iter().copied().filter(|&i| self.entries[i].0.element_count == Some(1)).collect();
        let needs_single: HashSet<usize> = single_element_slots(task).iter().map(|&(s, _)| s).collect();
        if let Some(&(_, role)) = single_element_slots(task).get(single.len()) {
            return Err(ConstraintError::single(
                Some(task),
                format!("elem({role}) = 1"),
                format!("{} single-element clips in corpus", single.len()),
            ));
        }
        if all.len() < arity {
            return Err(ConstraintError::single(Some(task), format!("arity = {arity}"), format!("{} usable clips", all.len())));
        }
        let dur = |i: usize| self.entries[i].1;
        let mut last = ConstraintError::single(Some(task), "selection", "no attempt made");
        for _ in 0..attempts.max(1) {
            let mut picked: Vec<usize> = Vec::with_capacity(arity);
            for slot in 0..arity {
                let pool = if needs_single.contains(&slot) { &single } else { &all };
                let free: Vec<usize> = pool.iter().copied().filter(|i| !picked.contains(i)).collect();
                match free.choose(rng) {
                    Some(&i) => picked.push(i),
                    None => break,
                }
            }
            if picked.len() < arity {
                last = ConstraintError::single(Some(task), "distinct inputs", "corpus too small");
                continue;
            }
            let violation = match task {
                EditTask::Add | EditTask::Drop if dur(picked[1]) > dur(picked[0]) => {
                    Some(("len(target) <= len(base)", dur(picked[1])))
                }
                EditTask::Replace if dur(picked[1]) > dur(picked[0]) => Some(("len(target) <= len(base)", dur(picked[1]))),
                EditTask::Replace if dur(picked[2]) > dur(picked[0]) => {
                    Some(("len(replacement) <= len(base)", dur(picked[2])))
                }
                EditTask::Swap if dur(picked[0]) + dur(picked[1]) > MAX_OUTPUT_SECONDS => {
                    Some(("len(first) + len(second) <= 47s", dur(picked[0]) + dur(picked[1])))
                }
                _ => None,
            };
            match violation {
                None => return Ok(picked),
                Some((c, secs)) => last = ConstraintError::single(Some(task), c, format!("{secs:.3} s")),
            }
        }
        Err(last)
    }
}

/// Builds `options.count` manual-edit triplets from `corpus` and appends
/// them to `manifest`, with audio under `<manifest dir>/audio`.
///
/// Sample `i` draws everything from its own stream, so a rerun with the same
/// seed reproduces the task sequence and skips ids already present.
pub fn make_manual(
    corpus: &[CorpusEntry],
    llm: &dyn LlmClient,
    manifest: &Path,
    options: &ManualOptions,
) -> Result<ManualSummary> {
    let start = Instant::now();
    let dir = manifest.parent().unwrap_or(Path::new(".")).to_path_buf();
    let audio_dir = dir.join("audio");
    let existing: HashSet<String> = if manifest.exists() {
        read_manifest_lenient(manifest)?.0.into_iter().map(|(_, r)| r.id).collect()
    } else {
        HashSet::new()
    };
    let mut pool = Pool::new(corpus);
    let mut summary = ManualSummary { requested: options.count, ..ManualSummary::default() };
    for index in 0..options.count {
        let mut rng = item_rng(options.seed, MANUAL_STAGE, index as u64);
        let task = sample_task(&mut rng);
        *summary.tasks.entry(task.name().to_string()).or_default() += 1;
        let id = manual_record_id(options.seed, index);
        if existing.contains(&id) {
            summary.existing += 1;
            continue;
        }
        let picked = match pool.select(task, options.selection_attempts, &mut rng) {
            Ok(p) => p,
            Err(e) => {
                log::info!("sample {index} ({task}) skipped: {e}");
                summary.skipped.push(SampleIssue { index, task, reason: e.to_string() });
                continue;
            }
        };
        let result = (|| -> Result<TripletRecord> {
            let clips = picked.iter().map(|&i| pool.load(i)).collect::<Result<Vec<_>>>()?;
            let inputs: Vec<&AudioClip> = clips.iter().collect();
            let counts: Vec<Option<u32>> = picked.iter().map(|&i| pool.entries[i].0.element_count).collect();
            let captions: Vec<String> = picked.iter().map(|&i| pool.entries[i].0.caption.clone()).collect();
            let params = sample_params(task, &inputs, &mut rng)?;
            let request = validate_constraints(task, &inputs, &params, &counts)?;
            let pair = apply(request, &mut rng)?;
            let trace = generate_instruction(task, &pair.params, &captions, llm, &mut rng)?;
            let input_name = store_audio(&audio_dir, &pair.input_audio)?;
            let output_name = store_audio(&audio_dir, &pair.output_audio)?;
            Ok(TripletRecord {
                id: id.clone(),
                input_wav: PathBuf::from("audio").join(input_name),
                output_wav: PathBuf::from("audio").join(output_name),
                instruction: trace.instruction().to_string(),
                method: Method::Manual,
                task: Some(task),
                edit_params: Some(pair.params),
                source_captions: captions,
                prompt: None,
                trial: None,
                objective: None,
                backends: BTreeMap::from([("llm".to_string(), llm.model())]),
                created_unix_ms: now_unix_ms(),
            })
        })();
        match result.and_then(|r| append_record(manifest, &r)) {
            Ok(()) => summary.written += 1,
            Err(Error::Constraint(e)) => {
                log::info!("sample {index} ({task}) skipped: {e}");
                summary.skipped.push(SampleIssue { index, task, reason: e.to_string() });
            }
            Err(e) => {
                log::warn!("sample {index} ({task}) failed: {e}");
                summary.failed.push(SampleIssue { index, task, reason: e.to_string() });
            }
        }
    }
    summary.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(summary)
}
