use rand::Rng;
use serde::{Deserialize, Serialize};

use super::judge::{checked_score, JudgeClient};
use super::{CandidateConfig, PromptTriplet};
use crate::bayesopt::{GenerateRequest, GeneratorBackend};
use crate::error::{Error, Result};
use crate::metrics::{clap_out, Embedder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateSearchConfig {
    pub pairs: usize,
    pub steps: u32,
    pub cfg_range: (f64, f64),
    /// A clip passes when its score is strictly greater than this.
    pub judge_threshold: u8,
}

impl Default for CandidateSearchConfig {
    fn default() -> Self {
        Self {
            pairs: 7,
            steps: 50,
            cfg_range: (3.0, 9.0),
            judge_threshold: 6,
        }
    }
}

/// One generated pair and how it fared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub seed: u64,
    pub cfg: f64,
    pub judge_scores: (u8, u8),
    /// Only computed for pairs that pass the judge.
    pub mean_clap: Option<f64>,
}

impl CandidateRecord {
    pub fn passed(&self, threshold: u8) -> bool {
        self.judge_scores.0 > threshold && self.judge_scores.1 > threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSearch {
    pub chosen: CandidateConfig,
    pub records: Vec<CandidateRecord>,
}

/// Generates `pairs` input/output clips with random seeds and guidance
/// scales, keeps pairs whose clips both beat the judge threshold, and picks
/// the one with the highest mean audio-caption similarity (earliest on ties).
///
/// Returns [`Error::Exhausted`] when no pair passes.
pub fn candidate_search<R: Rng + ?Sized>(
    triplet: &PromptTriplet,
    backend: &dyn GeneratorBackend,
    judge: &dyn JudgeClient,
    embedder: &dyn Embedder,
    config: &CandidateSearchConfig,
    rng: &mut R,
) -> Result<CandidateSearch> {
    triplet.validate()?;
    let (lo, hi) = config.cfg_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || config.pairs == 0 || config.steps == 0 {
        return Err(Error::Config(format!("invalid candidate search config {config:?}")));
    }
    let mut records = Vec::with_capacity(config.pairs);
    for _ in 0..config.pairs {
        let seed = rng.random::<u32>() as u64;
        let cfg = rng.random_range(lo..=hi);
        let request = |caption: &str, negative: &Option<String>| GenerateRequest {
            caption: caption.to_string(),
            negative_caption: negative.clone(),
            seed,
            cfg,
            steps: config.steps,
        };
        let a = backend.generate(&request(&triplet.input_caption, &triplet.negative_input))?;
        let b = backend.generate(&request(&triplet.output_caption, &triplet.negative_output))?;
        let scores = (
            checked_score(judge, &a, &triplet.input_caption)?,
            checked_score(judge, &b, &triplet.output_caption)?,
        );
        let mut record = CandidateRecord { seed, cfg, judge_scores: scores, mean_clap: None };
        if record.passed(config.judge_threshold) {
            let sa = clap_out(&a, &triplet.input_caption, embedder)?;
            let sb = clap_out(&b, &triplet.output_caption, embedder)?;
            record.mean_clap = Some(0.5 * (sa + sb));
        }
        records.push(record);
    }
    let best = records
        .iter()
        .filter_map(|r| r.mean_clap.map(|c| (r, c)))
        .fold(None::<(&CandidateRecord, f64)>, |acc, (r, c)| match acc {
            Some((_, b)) if b >= c => acc,
            _ => Some((r, c)),
        });
    let Some((r, clap)) = best else {
        return Err(Error::Exhausted);
    };
    let chosen = CandidateConfig { seed: r.seed, cfg: r.cfg, judge_scores: r.judge_scores, mean_clap: clap };
    Ok(CandidateSearch { chosen, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::AudioClip;
    use crate::bayesopt::make_synthetic_backend;
    use crate::metrics::BandEmbedder;
    use crate::prompts::EmbeddingJudge;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Fixed(u8);

    impl JudgeClient for Fixed {
        fn name(&self) -> String {
            "fixed".into()
        }

        fn score(&self, _: &AudioClip, _: &str) -> Result<u8> {
            Ok(self.0)
        }
    }

    fn triplet() -> PromptTriplet {
        PromptTriplet {
            input_caption: "a dog barks".into(),
            edit_instruction: "add rain".into(),
            output_caption: "a dog barks with light rain".into(),
            element_count: 1,
            negative_input: Some("light rain".into()),
            negative_output: None,
            source_dataset: "t".into(),
        }
    }

    #[test]
    fn threshold_is_strict() {
        let b = make_synthetic_backend("plateau").unwrap();
        let e = BandEmbedder::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = CandidateSearchConfig::default();
        assert!(matches!(candidate_search(&triplet(), &b, &Fixed(6), &e, &cfg, &mut rng), Err(Error::Exhausted)));
        let ok = candidate_search(&triplet(), &b, &Fixed(7), &e, &cfg, &mut rng).unwrap();
        assert_eq!(ok.records.len(), 7);
        assert!(ok.records.iter().all(|r| (3.0..=9.0).contains(&r.cfg)));
    }

    #[test]
    fn real_judge_prefers_matching_audio() {
        let b = make_synthetic_backend("plateau").unwrap();
        let e = BandEmbedder::default();
        let s = candidate_search(
            &triplet(),
            &b,
            &EmbeddingJudge::default(),
            &e,
            &CandidateSearchConfig::default(),
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        assert!(s.chosen.mean_clap > 0.9);
    }

    struct Counting {
        inner: BandEmbedder,
        audio_calls: AtomicUsize,
    }

    impl Embedder for Counting {
        fn name(&self) -> String {
            "counting".into()
        }
        fn dimension(&self) -> usize {
            self.inner.dimension()
        }
        fn embed_audio(&self, clip: &AudioClip) -> Result<Vec<f64>> {
            self.audio_calls.fetch_add(1, Ordering::SeqCst);
            self.inner.embed_audio(clip)
        }
        fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
            self.inner.embed_text(text)
        }
    }

    #[test]
    fn failing_pairs_skip_similarity() {
        let b = make_synthetic_backend("plateau").unwrap();
        let e = Counting { inner: BandEmbedder::default(), audio_calls: AtomicUsize::new(0) };
        let r = candidate_search(&triplet(), &b, &Fixed(3), &e, &CandidateSearchConfig::default(), &mut ChaCha8Rng::seed_from_u64(3));
        assert!(matches!(r, Err(Error::Exhausted)));
        assert_eq!(e.audio_calls.load(Ordering::SeqCst), 0);
    }
}
