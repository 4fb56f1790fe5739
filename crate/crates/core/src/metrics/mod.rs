//! Signal-level and embedding-space distances between clips.

pub mod embedding;
pub mod mock;
pub mod spectral;

use serde::{Deserialize, Serialize};

pub use embedding::{
    clap_dir, clap_out, clap_sim, collect_stats, cosine_similarity, direction_similarity, frechet_distance,
    inception_score, inception_score_splits, kl_divergence, Classifier, Embedder, EmbeddingStats,
};
pub use mock::{BandClassifier, BandEmbedder, BandLayout};
pub use spectral::{
    lsd, mr_stft_loss, ms_mel_loss, si_sdr, si_snr, stft_loss, stft_loss_at, MelScale, StftConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    LowerBetter,
    HigherBetter,
}

/// A named scalar metric and which way is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: String,
    pub value: f64,
    pub direction: Direction,
}

impl MetricValue {
    pub fn new(name: impl Into<String>, value: f64, direction: Direction) -> Self {
        Self {
            name: name.into(),
            value,
            direction,
        }
    }
}
