use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::rating::{elo_update, EloConfig, Verdict};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContenderSpec {
    pub id: String,
    /// What the contender stands for, such as a weight configuration.
    pub label: String,
}

/// One listening item: an input clip, its instruction, and each contender's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySample {
    pub id: String,
    pub input_clip: String,
    pub instruction: String,
    /// Contender id -> output clip reference.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyDefinition {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub contenders: Vec<ContenderSpec>,
    pub samples: Vec<StudySample>,
    #[serde(default)]
    pub config: EloConfig,
}

impl StudyDefinition {
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.id.trim().is_empty() {
            return Err(Error::Validation("study id is empty".into()));
        }
        let ids: BTreeSet<&str> = self.contenders.iter().map(|c| c.id.as_str()).collect();
        if ids.len() != self.contenders.len() {
            return Err(Error::Validation("contender ids must be unique".into()));
        }
        if self.contenders.len() < 2 {
            return Err(Error::Validation("a study needs at least two contenders".into()));
        }
        let sample_ids: BTreeSet<&str> = self.samples.iter().map(|s| s.id.as_str()).collect();
        if sample_ids.len() != self.samples.len() {
            return Err(Error::Validation("sample ids must be unique".into()));
        }
        for s in &self.samples {
            if let Some(unknown) = s.outputs.keys().find(|k| !ids.contains(k.as_str())) {
                return Err(Error::Validation(format!("sample {} names unknown contender {unknown}", s.id)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contender {
    pub id: String,
    pub label: String,
    pub rating: f64,
    pub games: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub id: String,
    pub study_id: String,
    pub sample_id: String,
    pub input_clip: String,
    pub instruction: String,
    pub contender_a: String,
    pub clip_a: String,
    pub contender_b: String,
    pub clip_b: String,
    #[serde(default)]
    pub verdict: Option<Verdict>,
    pub created_unix_ms: u64,
    #[serde(default)]
    pub decided_unix_ms: Option<u64>,
    /// Client key of the accepted verdict, so a retried submission can be
    /// recognised.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict_key: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MosScores {
    pub quality: u8,
    pub relevance: u8,
    pub faithfulness: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MosRating {
    pub sample_id: String,
    #[serde(flatten)]
    pub scores: MosScores,
}

impl MosRating {
    pub fn validate(&self) -> Result<()> {
        let s = self.scores;
        for (name, v) in [("quality", s.quality), ("relevance", s.relevance), ("faithfulness", s.faithfulness)] {
            if !(1..=5).contains(&v) {
                return Err(Error::Validation(format!("{name} score {v} outside 1..=5")));
            }
        }
        Ok(())
    }
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MosAggregate {
    pub count: usize,
    pub quality: MeanStd,
    pub relevance: MeanStd,
    pub faithfulness: MeanStd,
}

/// Everything that changes a study, in the order it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum StudyEvent {
    Scheduled { comparison: Comparison },
    Verdict {
        comparison_id: String,
        verdict: Verdict,
        at_unix_ms: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        key: Option<String>,
    },
    Mos { rating: MosRating },
}

/// In-memory state of one pairwise listening study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EloStudy {
    pub definition: StudyDefinition,
    contenders: Vec<Contender>,
    comparisons: Vec<Comparison>,
    mos: Vec<MosRating>,
    /// Events applied so far.
    pub seq: u64,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl EloStudy {
    pub fn new(definition: StudyDefinition) -> Result<Self> {
        definition.validate()?;
        let r0 = definition.config.initial_rating;
        let contenders = definition
            .contenders
            .iter()
            .map(|c| Contender { id: c.id.clone(), label: c.label.clone(), rating: r0, games: 0 })
            .collect();
        Ok(Self { definition, contenders, comparisons: Vec::new(), mos: Vec::new(), seq: 0 })
    }

    pub fn id(&self) -> &str {
        &self.definition.id
    }

    pub fn contenders(&self) -> &[Contender] {
        &self.contenders
    }

    pub fn comparisons(&self) -> &[Comparison] {
        &self.comparisons
    }

    pub fn comparison(&self, id: &str) -> Result<&Comparison> {
        self.comparisons
            .iter()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::NotFound(format!("comparison {id}")))
    }

    pub fn pending(&self) -> Vec<&Comparison> {
        self.comparisons.iter().filter(|c| c.verdict.is_none()).collect()
    }

    fn contender_mut(&mut self, id: &str) -> Result<&mut Contender> {
        self.contenders
            .iter_mut()
            .find(|c| c.id == id)
            .ok_or_else(|| Error::NotFound(format!("contender {id}")))
    }

    /// Picks the next comparison without changing state.
    ///
    /// Among contender pairs that still have an unserved sample, the pair
    /// with the fewest games (pending comparisons included) wins, then the
    /// closest ratings, then the smaller ids. The first unserved sample in
    /// study order is used.
    pub fn plan_next(&self, now_unix_ms: u64) -> Result<Comparison> {
        let served: BTreeSet<(String, (String, String))> = self
            .comparisons
            .iter()
            .map(|c| (c.sample_id.clone(), pair_key(&c.contender_a, &c.contender_b)))
            .collect();
        let mut load: HashMap<&str, u32> = self.contenders.iter().map(|c| (c.id.as_str(), c.games)).collect();
        for c in self.pending() {
            *load.get_mut(c.contender_a.as_str()).expect("known") += 1;
            *load.get_mut(c.contender_b.as_str()).expect("known") += 1;
        }
        let mut best: Option<((u32, f64, &str, &str), &StudySample)> = None;
        for (i, a) in self.contenders.iter().enumerate() {
            for b in &self.contenders[i + 1..] {
                let (lo, hi) = if a.id <= b.id { (a, b) } else { (b, a) };
                let key = pair_key(&lo.id, &hi.id);
                let sample = self.definition.samples.iter().find(|s| {
                    s.outputs.contains_key(&lo.id)
                        && s.outputs.contains_key(&hi.id)
                        && !served.contains(&(s.id.clone(), key.clone()))
                });
                let Some(sample) = sample else { continue };
                let rank = (load[lo.id.as_str()] + load[hi.id.as_str()], (lo.rating - hi.rating).abs(), lo.id.as_str(), hi.id.as_str());
                let better = match &best {
                    None => true,
                    Some((r, _)) => {
                        rank.0.cmp(&r.0).then(rank.1.total_cmp(&r.1)).then(rank.2.cmp(r.2)).then(rank.3.cmp(r.3)).is_lt()
                    }
                };
                if better {
                    best = Some((rank, sample));
                }
            }
        }
        let Some(((_, _, a, b), sample)) = best else {
            return Err(Error::StudyComplete);
        };
        Ok(Comparison {
            id: format!("{}-c{}", self.id(), self.comparisons.len() + 1),
            study_id: self.id().to_string(),
            sample_id: sample.id.clone(),
            input_clip: sample.input_clip.clone(),
            instruction: sample.instruction.clone(),
            contender_a: a.to_string(),
            clip_a: sample.outputs[a].clone(),
            contender_b: b.to_string(),
            clip_b: sample.outputs[b].clone(),
            verdict: None,
            created_unix_ms: now_unix_ms,
            decided_unix_ms: None,
            verdict_key: None,
        })
    }

    /// Checks an event against the current state without applying it.
    pub fn check(&self, event: &StudyEvent) -> Result<()> {
        match event {
            StudyEvent::Scheduled { comparison } => {
                if self.comparisons.iter().any(|c| c.id == comparison.id) {
                    return Err(Error::Conflict(format!("comparison {} exists", comparison.id)));
                }
                if comparison.contender_a == comparison.contender_b {
                    return Err(Error::Validation("a comparison needs two different contenders".into()));
                }
                Ok(())
            }
            StudyEvent::Verdict { comparison_id, verdict, .. } => {
                let c = self.comparison(comparison_id)?;
                if c.verdict.is_some() {
                    return Err(Error::Conflict(format!("comparison {comparison_id} already decided")));
                }
                if *verdict == Verdict::Tie && !self.definition.config.allow_ties {
                    return Err(Error::Validation("ties are disabled for this study".into()));
                }
                Ok(())
            }
            StudyEvent::Mos { rating } => {
                rating.validate()?;
                if !self.definition.samples.iter().any(|s| s.id == rating.sample_id) {
                    return Err(Error::NotFound(format!("sample {}", rating.sample_id)));
                }
                Ok(())
            }
        }
    }

    /// Validates and applies one event.
    pub fn apply(&mut self, event: &StudyEvent) -> Result<()> {
        self.check(event)?;
        match event {
            StudyEvent::Scheduled { comparison } => self.comparisons.push(comparison.clone()),
            StudyEvent::Verdict { comparison_id, verdict, at_unix_ms, key } => {
                let k = self.definition.config.k;
                let idx = self.comparisons.iter().position(|c| &c.id == comparison_id).expect("checked");
                let (a, b) = (self.comparisons[idx].contender_a.clone(), self.comparisons[idx].contender_b.clone());
                let (ra, rb) = (self.contender_mut(&a)?.rating, self.contender_mut(&b)?.rating);
                let (na, nb) = elo_update(ra, rb, *verdict, k);
                for (id, r) in [(a, na), (b, nb)] {
                    let c = self.contender_mut(&id)?;
                    c.rating = r;
                    c.games += 1;
                }
                let c = &mut self.comparisons[idx];
                c.verdict = Some(*verdict);
                c.decided_unix_ms = Some(*at_unix_ms);
                c.verdict_key = key.clone();
            }
            StudyEvent::Mos { rating } => self.mos.push(rating.clone()),
        }
        self.seq += 1;
        Ok(())
    }

    /// Rebuilds a study from its definition and event log.
    pub fn replay<'a>(definition: StudyDefinition, events: impl IntoIterator<Item = &'a StudyEvent>) -> Result<Self> {
        let mut s = Self::new(definition)?;
        for e in events {
            s.apply(e)?;
        }
        Ok(s)
    }

    /// Rating descending, then fewer games, then id.
    pub fn ranking(&self) -> Vec<Contender> {
        let mut v = self.contenders.clone();
        v.sort_by(|x, y| y.rating.total_cmp(&x.rating).then(x.games.cmp(&y.games)).then(x.id.cmp(&y.id)));
        v
    }

    pub fn total_rating(&self) -> f64 {
        self.contenders.iter().map(|c| c.rating).sum()
    }

    pub fn mos_ratings(&self) -> &[MosRating] {
        &self.mos
    }

    pub fn aggregate_mos(&self) -> MosAggregate {
        let col = |f: fn(&MosScores) -> u8| self.mos.iter().map(|r| f(&r.scores) as f64).collect::<Vec<_>>();
        MosAggregate {
            count: self.mos.len(),
            quality: MeanStd::of(&col(|s| s.quality)),
            relevance: MeanStd::of(&col(|s| s.relevance)),
            faithfulness: MeanStd::of(&col(|s| s.faithfulness)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn definition(contenders: &[&str], samples: usize) -> StudyDefinition {
        StudyDefinition {
            id: "s".into(),
            title: String::new(),
            contenders: contenders.iter().map(|c| ContenderSpec { id: c.to_string(), label: c.to_string() }).collect(),
            samples: (0..samples)
                .map(|i| StudySample {
                    id: format!("x{i}"),
                    input_clip: format!("in{i}.wav"),
                    instruction: "add rain".into(),
                    outputs: contenders.iter().map(|c| (c.to_string(), format!("{c}{i}.wav"))).collect(),
                })
                .collect(),
            config: EloConfig::default(),
        }
    }

    fn decide(s: &mut EloStudy, v: Verdict) -> Comparison {
        let c = s.plan_next(0).unwrap();
        s.apply(&StudyEvent::Scheduled { comparison: c.clone() }).unwrap();
        s.apply(&StudyEvent::Verdict { comparison_id: c.id.clone(), verdict: v, at_unix_ms: 1, key: None }).unwrap();
        c
    }

    #[test]
    fn fewest_games_are_paired() {
        let mut s = EloStudy::new(definition(&["a", "b", "c"], 10)).unwrap();
        s.contender_mut("a").unwrap().games = 5;
        let c = s.plan_next(0).unwrap();
        assert_eq!((c.contender_a.as_str(), c.contender_b.as_str()), ("b", "c"));
    }

    #[test]
    fn exhaustion_signals_completion() {
        let mut s = EloStudy::new(definition(&["a", "b"], 2)).unwrap();
        decide(&mut s, Verdict::A);
        decide(&mut s, Verdict::B);
        assert!(matches!(s.plan_next(0), Err(Error::StudyComplete)));
    }

    #[test]
    fn duplicate_verdict_conflicts() {
        let mut s = EloStudy::new(definition(&["a", "b"], 2)).unwrap();
        let c = decide(&mut s, Verdict::A);
        let again = StudyEvent::Verdict { comparison_id: c.id, verdict: Verdict::B, at_unix_ms: 2, key: None };
        assert!(matches!(s.apply(&again), Err(Error::Conflict(_))));
        let unknown = StudyEvent::Verdict { comparison_id: "nope".into(), verdict: Verdict::B, at_unix_ms: 2, key: None };
        assert!(matches!(s.apply(&unknown), Err(Error::NotFound(_))));
    }

    #[test]
    fn ranking_order_and_two_wins() {
        let s = EloStudy::new(definition(&["b", "a", "c"], 4)).unwrap();
        let fresh: Vec<String> = s.ranking().into_iter().map(|c| c.id).collect();
        assert_eq!(fresh, ["a", "b", "c"]);
        let mut s = EloStudy::new(definition(&["a", "b"], 4)).unwrap();
        decide(&mut s, Verdict::B);
        decide(&mut s, Verdict::B);
        assert_eq!(s.ranking()[0].id, "b");
    }

    #[test]
    fn mos_population_std() {
        let mut s = EloStudy::new(definition(&["a", "b"], 1)).unwrap();
        for q in [2, 4] {
            let r = MosRating { sample_id: "x0".into(), scores: MosScores { quality: q, relevance: 3, faithfulness: 5 } };
            s.apply(&StudyEvent::Mos { rating: r }).unwrap();
        }
        let agg = s.aggregate_mos();
        assert_eq!((agg.quality.mean, agg.quality.std), (3.0, 1.0));
        assert_eq!(agg.relevance.std, 0.0);
        let bad = MosRating { sample_id: "x0".into(), scores: MosScores { quality: 6, relevance: 3, faithfulness: 5 } };
        assert!(matches!(s.apply(&StudyEvent::Mos { rating: bad }), Err(Error::Validation(_))));
    }
}
