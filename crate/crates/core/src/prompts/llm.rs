use std::path::Path;
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Which structured output a request asks for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmTask {
    PromptTriplet,
    Instruction,
    Variation,
    Minimization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmRequest {
    pub task: LlmTask,
    pub payload: Value,
    /// Zero-based attempt number, so retries can be told apart.
    pub attempt: u32,
}

/// A language model that returns JSON objects.
pub trait LlmClient: Send + Sync {
    fn model(&self) -> String;
    fn complete(&self, request: &LlmRequest) -> Result<Value>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Extra attempts after a response fails validation.
    pub retries: u32,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { retries: 3 }
    }
}

/// Sends `payload` and parses the reply as `T`, retrying on schema or
/// validation failures. Transport errors are returned immediately.
pub fn complete_structured<T: DeserializeOwned>(
    client: &dyn LlmClient,
    task: LlmTask,
    payload: Value,
    policy: RetryPolicy,
    validate: impl Fn(&T) -> Result<()>,
) -> Result<T> {
    let mut last = String::new();
    for attempt in 0..=policy.retries {
        let request = LlmRequest { task, payload: payload.clone(), attempt };
        let raw = client.complete(&request)?;
        match serde_json::from_value::<T>(raw) {
            Ok(parsed) => match validate(&parsed) {
                Ok(()) => return Ok(parsed),
                Err(e) => last = e.to_string(),
            },
            Err(e) => last = e.to_string(),
        }
        log::debug!("{task:?} attempt {attempt} rejected: {last}");
    }
    Err(Error::Client(format!(
        "{} returned no valid {task:?} response in {} attempts (last: {last})",
        client.model(),
        policy.retries + 1
    )))
}

/// Reply schema for prompt-triplet generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletResponse {
    #[serde(default)]
    pub reasoning: Option<String>,
    pub instruction: String,
    pub output_caption: String,
    pub element_count: u32,
    #[serde(default)]
    pub negative_input: Option<String>,
    #[serde(default)]
    pub negative_output: Option<String>,
}

/// Reply schema for every instruction stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionResponse {
    pub instruction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmExchange {
    pub model: String,
    pub request: LlmRequest,
    pub response: std::result::Result<Value, String>,
}

/// Wraps a client and keeps every exchange for later inspection.
pub struct RecordingLlm<C> {
    inner: C,
    log: Mutex<Vec<LlmExchange>>,
}

impl<C: LlmClient> RecordingLlm<C> {
    pub fn new(inner: C) -> Self {
        Self { inner, log: Mutex::new(Vec::new()) }
    }

    pub fn exchanges(&self) -> Vec<LlmExchange> {
        self.log.lock().expect("llm log poisoned").clone()
    }

    /// Appends the recorded exchanges to a JSONL file.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        for x in self.exchanges() {
            let line = serde_json::to_string(&x).map_err(|e| Error::Format(e.to_string()))?;
            writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

impl<C: LlmClient> LlmClient for RecordingLlm<C> {
    fn model(&self) -> String {
        self.inner.model()
    }

    fn complete(&self, request: &LlmRequest) -> Result<Value> {
        let response = self.inner.complete(request);
        self.log.lock().expect("llm log poisoned").push(LlmExchange {
            model: self.inner.model(),
            request: request.clone(),
            response: response.as_ref().map(Clone::clone).map_err(|e| e.to_string()),
        });
        response
    }
}
