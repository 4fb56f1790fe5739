use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::transport::{HttpConfig, HttpTransport, TokenBucket};
use crate::audio::{read_wav, write_wav, AudioClip, WavEncoding};
use crate::bayesopt::{GenerateRequest, GeneratorBackend, P2PRequest, ZetaRequest};
use crate::error::{Error, Result};
use crate::metrics::Embedder;
use crate::prompts::{JudgeClient, LlmClient, LlmRequest};

/// Audio travels as base64 float WAV so nothing is lost in transit.
pub fn encode_audio(clip: &AudioClip) -> Result<String> {
    Ok(B64.encode(write_wav(clip, WavEncoding::Float32)?))
}

pub fn decode_audio(text: &str) -> Result<AudioClip> {
    let bytes = B64.decode(text).map_err(|e| Error::Format(format!("audio payload is not base64: {e}")))?;
    read_wav(&bytes)
}

fn field<'a>(v: &'a Value, name: &str, wrap: fn(String) -> Error) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| wrap(format!("reply lacks field {name:?}")))
}

fn audio_field(v: &Value, name: &str) -> Result<AudioClip> {
    let s = field(v, name, Error::Backend)?
        .as_str()
        .ok_or_else(|| Error::Backend(format!("field {name:?} is not a string")))?;
    decode_audio(s)
}

/// Generator behind `POST /generate`, `/p2p` and `/zeta`.
#[derive(Debug, Clone)]
pub struct RemoteGenerator {
    name: String,
    http: HttpTransport,
}

impl RemoteGenerator {
    pub fn new(name: impl Into<String>, config: HttpConfig) -> Result<Self> {
        Ok(Self { name: name.into(), http: HttpTransport::new(config)? })
    }

    /// Shares `bucket` with other clients so their combined rate is capped.
    pub fn with_limiter(mut self, bucket: Option<Arc<TokenBucket>>) -> Self {
        if let Some(b) = bucket {
            self.http = self.http.with_bucket(b);
        }
        self
    }
}

impl GeneratorBackend for RemoteGenerator {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn generate(&self, r: &GenerateRequest) -> Result<AudioClip> {
        let body = serde_json::to_value(r).map_err(|e| Error::Format(e.to_string()))?;
        audio_field(&self.http.post_json("generate", &body, Error::Backend)?, "audio")
    }

    fn p2p_edit(&self, r: &P2PRequest) -> Result<(AudioClip, AudioClip)> {
        let body = serde_json::to_value(r).map_err(|e| Error::Format(e.to_string()))?;
        let reply = self.http.post_json("p2p", &body, Error::Backend)?;
        Ok((audio_field(&reply, "input")?, audio_field(&reply, "output")?))
    }

    fn zeta_edit(&self, r: &ZetaRequest) -> Result<AudioClip> {
        let body = json!({
            "in_audio": encode_audio(&r.in_audio)?,
            "in_caption": r.in_caption,
            "out_caption": r.out_caption,
            "negative_out": r.negative_out,
            "seed": r.seed,
            "steps": r.steps,
            "params": r.params,
        });
        audio_field(&self.http.post_json("zeta", &body, Error::Backend)?, "audio")
    }
}

/// Embedder behind `POST /embed/audio` and `/embed/text`.
#[derive(Debug, Clone)]
pub struct RemoteEmbedder {
    name: String,
    dimension: usize,
    http: HttpTransport,
}

impl RemoteEmbedder {
    pub fn new(name: impl Into<String>, dimension: usize, config: HttpConfig) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        Ok(Self { name: name.into(), dimension, http: HttpTransport::new(config)? })
    }

    /// Shares `bucket` with other clients so their combined rate is capped.
    pub fn with_limiter(mut self, bucket: Option<Arc<TokenBucket>>) -> Self {
        if let Some(b) = bucket {
            self.http = self.http.with_bucket(b);
        }
        self
    }

    fn vector(&self, path: &str, body: Value) -> Result<Vec<f64>> {
        let reply = self.http.post_json(path, &body, Error::Backend)?;
        let v: Vec<f64> = serde_json::from_value(field(&reply, "embedding", Error::Backend)?.clone())
            .map_err(|e| Error::Backend(format!("embedding is not a number list: {e}")))?;
        if v.len() != self.dimension {
            return Err(Error::Backend(format!("expected {} dimensions, got {}", self.dimension, v.len())));
        }
        Ok(v)
    }
}

impl Embedder for RemoteEmbedder {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_audio(&self, clip: &AudioClip) -> Result<Vec<f64>> {
        self.vector("embed/audio", json!({ "audio": encode_audio(clip)? }))
    }

    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        self.vector("embed/text", json!({ "text": text }))
    }
}

/// Language model behind `POST /complete`; the reply's `response` object is
/// handed to schema validation unchanged.
#[derive(Debug, Clone)]
pub struct RemoteLlm {
    model: String,
    http: HttpTransport,
}

impl RemoteLlm {
    pub fn new(model: impl Into<String>, config: HttpConfig) -> Result<Self> {
        Ok(Self { model: model.into(), http: HttpTransport::new(config)? })
    }

    /// Shares `bucket` with other clients so their combined rate is capped.
    pub fn with_limiter(mut self, bucket: Option<Arc<TokenBucket>>) -> Self {
        if let Some(b) = bucket {
            self.http = self.http.with_bucket(b);
        }
        self
    }
}

impl LlmClient for RemoteLlm {
    fn model(&self) -> String {
        self.model.clone()
    }

    fn complete(&self, request: &LlmRequest) -> Result<Value> {
        let body = json!({
            "model": self.model,
            "task": request.task,
            "payload": request.payload,
            "attempt": request.attempt,
        });
        let reply = self.http.post_json("complete", &body, Error::Client)?;
        Ok(field(&reply, "response", Error::Client)?.clone())
    }
}

/// Scoring instructions sent with every judge request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRubric(pub String);

impl Default for JudgeRubric {
    fn default() -> Self {
        Self(
            "Listen to the clip and list every sound you can hear. Compare that list with the caption and \
             give one integer from 1 (nothing matches) to 10 (every described sound is present and nothing \
             contradicts the caption)."
                .into(),
        )
    }
}

/// Judge behind `POST /score`.
#[derive(Debug, Clone)]
pub struct RemoteJudge {
    name: String,
    rubric: JudgeRubric,
    http: HttpTransport,
}

impl RemoteJudge {
    pub fn new(name: impl Into<String>, rubric: JudgeRubric, config: HttpConfig) -> Result<Self> {
        Ok(Self { name: name.into(), rubric, http: HttpTransport::new(config)? })
    }

    /// Shares `bucket` with other clients so their combined rate is capped.
    pub fn with_limiter(mut self, bucket: Option<Arc<TokenBucket>>) -> Self {
        if let Some(b) = bucket {
            self.http = self.http.with_bucket(b);
        }
        self
    }
}

impl JudgeClient for RemoteJudge {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn score(&self, audio: &AudioClip, caption: &str) -> Result<u8> {
        let body = json!({ "audio": encode_audio(audio)?, "caption": caption, "rubric": self.rubric.0 });
        let reply = self.http.post_json("score", &body, Error::Client)?;
        field(&reply, "score", Error::Client)?
            .as_u64()
            .and_then(|s| u8::try_from(s).ok())
            .ok_or_else(|| Error::Client("score is not a small integer".into()))
    }
}
