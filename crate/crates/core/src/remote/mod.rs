//! HTTP clients for generators, embedders, language models and judges.

mod clients;
mod transport;

pub use clients::{
    decode_audio, encode_audio, JudgeRubric, RemoteEmbedder, RemoteGenerator, RemoteJudge, RemoteLlm,
};
pub use transport::{idempotency_key, HttpConfig, HttpTransport, TokenBucket};
