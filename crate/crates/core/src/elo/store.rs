//! Durable multi-study state.
//!
//! Each study lives in `<root>/<study id>/` as `definition.json`, an
//! append-only `events.jsonl` and an occasional `snapshot.json`. Loading
//! starts from the snapshot and replays the events recorded after it.
//! Every event is validated, written and synced before it is applied, so a
//! crash never leaves memory ahead of the log.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use super::rating::Verdict;
use super::study::{Comparison, Contender, EloStudy, MosAggregate, MosRating, StudyDefinition, StudyEvent};
use crate::error::{Error, Result};
use crate::manifest::{now_unix_ms, truncate_partial_tail};

const DEFINITION: &str = "definition.json";
const EVENTS: &str = "events.jsonl";
const SNAPSHOT: &str = "snapshot.json";

fn to_json<T: serde::Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::Format(e.to_string()))
}

fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, body).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Reads every event in a log, dropping an unterminated last line.
pub fn read_events(path: &Path) -> Result<Vec<StudyEvent>> {
    let mut file = OpenOptions::new().read(true).write(true).open(path).map_err(|e| Error::io(path, e))?;
    truncate_partial_tail(&mut file, path)?;
    file.seek(SeekFrom::Start(0)).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

struct StudySlot {
    study: EloStudy,
    log: Option<(PathBuf, File)>,
}

impl StudySlot {
    fn commit(&mut self, event: StudyEvent, snapshot_every: u64) -> Result<()> {
        self.study.check(&event)?;
        if let Some((path, file)) = &mut self.log {
            let mut line = to_json(&event)?;
            line.push('\n');
            file.write_all(line.as_bytes()).map_err(|e| Error::io(&*path, e))?;
            file.sync_data().map_err(|e| Error::io(&*path, e))?;
        }
        self.study.apply(&event)?;
        if snapshot_every > 0 && self.study.seq % snapshot_every == 0 {
            if let Some((path, _)) = &self.log {
                write_atomic(&path.with_file_name(SNAPSHOT), &to_json(&self.study)?)?;
            }
        }
        Ok(())
    }
}

/// All studies served by one process. Each study has a single writer.
pub struct StudyStore {
    root: Option<PathBuf>,
    snapshot_every: u64,
    studies: RwLock<BTreeMap<String, Arc<Mutex<StudySlot>>>>,
}

impl StudyStore {
    /// A store that keeps nothing on disk.
    pub fn in_memory() -> Self {
        Self { root: None, snapshot_every: 0, studies: RwLock::new(BTreeMap::new()) }
    }

    /// Opens (or creates) a store rooted at `root` and loads every study in it.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let store = Self { root: Some(root.clone()), snapshot_every: 100, studies: RwLock::new(BTreeMap::new()) };
        let mut dirs: Vec<PathBuf> = std::fs::read_dir(&root)
            .map_err(|e| Error::io(&root, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(DEFINITION).is_file())
            .collect();
        dirs.sort();
        for dir in dirs {
            let (study, file) = load_study(&dir)?;
            let slot = StudySlot { study, log: Some((dir.join(EVENTS), file)) };
            store.insert(slot)?;
        }
        Ok(store)
    }

    pub fn with_snapshot_every(mut self, events: u64) -> Self {
        self.snapshot_every = events;
        self
    }

    fn insert(&self, slot: StudySlot) -> Result<()> {
        let id = slot.study.id().to_string();
        let mut map = self.studies.write().expect("store lock poisoned");
        if map.contains_key(&id) {
            return Err(Error::Conflict(format!("study {id} exists")));
        }
        map.insert(id, Arc::new(Mutex::new(slot)));
        Ok(())
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<StudySlot>>> {
        self.studies
            .read()
            .expect("store lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("study {id}")))
    }

    fn with_study<T>(&self, id: &str, f: impl FnOnce(&mut StudySlot) -> Result<T>) -> Result<T> {
        let slot = self.slot(id)?;
        let mut guard = slot.lock().expect("study lock poisoned");
        f(&mut guard)
    }

    /// Comparison ids are `<study>-c<n>`; study ids may contain `-c` too.
    fn study_of_comparison(&self, comparison_id: &str) -> Result<String> {
        let map = self.studies.read().expect("store lock poisoned");
        let mut candidates: Vec<&String> = map
            .keys()
            .filter(|k| {
                comparison_id
                    .strip_prefix(k.as_str())
                    .and_then(|rest| rest.strip_prefix("-c"))
                    .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
            })
            .collect();
        candidates.sort_by_key(|k| std::cmp::Reverse(k.len()));
        candidates
            .first()
            .map(|k| k.to_string())
            .ok_or_else(|| Error::NotFound(format!("comparison {comparison_id}")))
    }

    pub fn create_study(&self, definition: StudyDefinition) -> Result<EloStudy> {
        let study = EloStudy::new(definition)?;
        if self.studies.read().expect("store lock poisoned").contains_key(study.id()) {
            return Err(Error::Conflict(format!("study {} exists", study.id())));
        }
        let log = match &self.root {
            None => None,
            Some(root) => {
                if study.id().contains(['/', '\\']) || study.id().starts_with('.') {
                    return Err(Error::Validation(format!("study id {:?} is not a valid name", study.id())));
                }
                let dir = root.join(study.id());
                std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                write_atomic(&dir.join(DEFINITION), &to_json(&study.definition)?)?;
                let path = dir.join(EVENTS);
                let file = OpenOptions::new().create(true).append(true).open(&path).map_err(|e| Error::io(&path, e))?;
                Some((path, file))
            }
        };
        let snapshot = study.clone();
        self.insert(StudySlot { study, log })?;
        Ok(snapshot)
    }

    pub fn study_ids(&self) -> Vec<String> {
        self.studies.read().expect("store lock poisoned").keys().cloned().collect()
    }

    pub fn study(&self, id: &str) -> Result<EloStudy> {
        self.with_study(id, |s| Ok(s.study.clone()))
    }

    /// Schedules and records the next comparison of a study.
    pub fn next_comparison(&self, id: &str) -> Result<Comparison> {
        let every = self.snapshot_every;
        self.with_study(id, |s| {
            let c = s.study.plan_next(now_unix_ms())?;
            s.commit(StudyEvent::Scheduled { comparison: c.clone() }, every)?;
            Ok(c)
        })
    }

    pub fn pending(&self, id: &str) -> Result<Vec<Comparison>> {
        self.with_study(id, |s| Ok(s.study.pending().into_iter().cloned().collect()))
    }

    pub fn comparison(&self, comparison_id: &str) -> Result<Comparison> {
        let id = self.study_of_comparison(comparison_id)?;
        self.with_study(&id, |s| s.study.comparison(comparison_id).cloned())
    }

    /// Records a verdict. Resubmitting the same verdict with the same
    /// non-empty `key` returns the stored comparison instead of a conflict.
    pub fn submit_verdict(&self, comparison_id: &str, verdict: Verdict, key: Option<&str>) -> Result<Comparison> {
        let id = self.study_of_comparison(comparison_id)?;
        let every = self.snapshot_every;
        let key = key.filter(|k| !k.is_empty());
        self.with_study(&id, |s| {
            let current = s.study.comparison(comparison_id)?;
            if key.is_some() && current.verdict == Some(verdict) && current.verdict_key.as_deref() == key {
                return Ok(current.clone());
            }
            let event = StudyEvent::Verdict {
                comparison_id: comparison_id.to_string(),
                verdict,
                at_unix_ms: now_unix_ms(),
                key: key.map(str::to_string),
            };
            s.commit(event, every)?;
            s.study.comparison(comparison_id).cloned()
        })
    }

    pub fn ranking(&self, id: &str) -> Result<Vec<Contender>> {
        self.with_study(id, |s| Ok(s.study.ranking()))
    }

    pub fn submit_mos(&self, id: &str, rating: MosRating) -> Result<()> {
        let every = self.snapshot_every;
        self.with_study(id, |s| s.commit(StudyEvent::Mos { rating }, every))
    }

    pub fn aggregate_mos(&self, id: &str) -> Result<MosAggregate> {
        self.with_study(id, |s| Ok(s.study.aggregate_mos()))
    }
}

fn load_study(dir: &Path) -> Result<(EloStudy, File)> {
    let def_path = dir.join(DEFINITION);
    let text = std::fs::read_to_string(&def_path).map_err(|e| Error::io(&def_path, e))?;
    let definition: StudyDefinition =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", def_path.display())))?;
    let events_path = dir.join(EVENTS);
    if !events_path.exists() {
        File::create(&events_path).map_err(|e| Error::io(&events_path, e))?;
    }
    let events = read_events(&events_path)?;
    let snap_path = dir.join(SNAPSHOT);
    let snapshot: Option<EloStudy> = match std::fs::read_to_string(&snap_path) {
        Ok(t) => match serde_json::from_str::<EloStudy>(&t) {
            Ok(s) if s.definition == definition && s.seq as usize <= events.len() => Some(s),
            _ => {
                log::warn!("{}: ignoring stale or unreadable snapshot", snap_path.display());
                None
            }
        },
        Err(_) => None,
    };
    let study = match snapshot {
        Some(mut s) => {
            let start = s.seq as usize;
            for e in &events[start..] {
                s.apply(e)?;
            }
            s
        }
        None => EloStudy::replay(definition, &events)?,
    };
    let file = OpenOptions::new().append(true).open(&events_path).map_err(|e| Error::io(&events_path, e))?;
    Ok((study, file))
}
