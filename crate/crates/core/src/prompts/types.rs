use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An input caption with its edit instruction and target caption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTriplet {
    pub input_caption: String,
    pub edit_instruction: String,
    pub output_caption: String,
    /// Distinct sound sources named in the input caption.
    pub element_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_input: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_output: Option<String>,
    /// Corpus the input caption came from.
    #[serde(default)]
    pub source_dataset: String,
}

impl PromptTriplet {
    pub fn validate(&self) -> Result<()> {
        let blank = |s: &str| s.trim().is_empty();
        if blank(&self.input_caption) || blank(&self.output_caption) {
            return Err(Error::Validation("captions must be non-empty".into()));
        }
        if blank(&self.edit_instruction) {
            return Err(Error::Validation("instruction must be non-empty".into()));
        }
        if self.element_count == 0 {
            return Err(Error::Validation("element_count must be >= 1".into()));
        }
        Ok(())
    }
}

/// Generation settings picked by candidate search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateConfig {
    pub seed: u64,
    pub cfg: f64,
    /// Judge scores for the input and output clips.
    pub judge_scores: (u8, u8),
    /// Mean of the input and output audio-caption similarities.
    pub mean_clap: f64,
}
