use serde::{Deserialize, Serialize};

use super::space::{P2PParams, ZetaParams};
use crate::audio::AudioClip;
use crate::error::Result;

/// Text-to-audio generation of one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateRequest {
    pub caption: String,
    pub negative_caption: Option<String>,
    pub seed: u64,
    pub cfg: f64,
    pub steps: u32,
}

/// Joint generation of an input/output pair with attention injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P2PRequest {
    pub in_caption: String,
    pub out_caption: String,
    pub negative_in: Option<String>,
    pub negative_out: Option<String>,
    pub seed: u64,
    pub cfg: f64,
    pub steps: u32,
    pub params: P2PParams,
}

/// Inversion-based edit of an existing clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaRequest {
    pub in_audio: AudioClip,
    pub in_caption: String,
    pub out_caption: String,
    pub negative_out: Option<String>,
    pub seed: u64,
    pub steps: u32,
    pub params: ZetaParams,
}

/// A generative model driven by the parameter studies.
///
/// Implementations must be deterministic in all request fields.
pub trait GeneratorBackend: Send + Sync {
    /// Identity recorded in manifests.
    fn name(&self) -> String;
    fn generate(&self, request: &GenerateRequest) -> Result<AudioClip>;
    /// Returns `(input, output)`.
    fn p2p_edit(&self, request: &P2PRequest) -> Result<(AudioClip, AudioClip)>;
    fn zeta_edit(&self, request: &ZetaRequest) -> Result<AudioClip>;
}
