use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bayesopt::TrialRecord;
use crate::edits::{EditParams, EditTask};
use crate::error::{Error, Result};
use crate::prompts::PromptTriplet;

/// How the output audio of a triplet was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    P2p,
    Ddpm,
    Manual,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::P2p, Method::Ddpm, Method::Manual];

    pub fn name(self) -> &'static str {
        match self {
            Method::P2p => "p2p",
            Method::Ddpm => "ddpm",
            Method::Manual => "manual",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method {s:?} (expected p2p, ddpm or manual)")))
    }
}

/// One manifest line. Relative WAV paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripletRecord {
    pub id: String,
    pub input_wav: PathBuf,
    pub output_wav: PathBuf,
    pub instruction: String,
    pub method: Method,
    /// Manual records only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<EditTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edit_params: Option<EditParams>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub source_captions: Vec<String>,
    /// Generated records only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<PromptTriplet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<TrialRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    /// Role -> backend identity, e.g. `"generator" -> "synthetic/bowl"`.
    #[serde(default)]
    pub backends: BTreeMap<String, String>,
    /// Milliseconds since the Unix epoch.
    pub created_unix_ms: u64,
}

pub fn now_unix_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl TripletRecord {
    pub fn resolve(&self, base_dir: &Path) -> (PathBuf, PathBuf) {
        (base_dir.join(&self.input_wav), base_dir.join(&self.output_wav))
    }

    /// Field-level problems that need no file access.
    pub fn structural_problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.id.trim().is_empty() {
            out.push("empty id".to_string());
        }
        if self.instruction.trim().is_empty() {
            out.push("empty instruction".to_string());
        }
        match self.method {
            Method::Manual => {
                if self.task.is_none() {
                    out.push("manual record without task".into());
                }
                if self.prompt.is_some() || self.trial.is_some() {
                    out.push("manual record with prompt or trial".into());
                }
                if let (Some(task), Some(p)) = (self.task, &self.edit_params) {
                    if p.task() != task {
                        out.push(format!("edit params for {} on a {task} record", p.task()));
                    }
                }
            }
            Method::P2p | Method::Ddpm => {
                if self.task.is_some() || self.edit_params.is_some() {
                    out.push(format!("{} record with manual task fields", self.method));
                }
                match (&self.prompt, &self.trial) {
                    (Some(p), Some(t)) => {
                        if let Err(e) = p.validate() {
                            out.push(format!("provenance: prompt invalid ({e})"));
                        }
                        if t.objective().is_none() {
                            out.push("provenance: trial has no objective".into());
                        }
                    }
                    _ => out.push("provenance: missing prompt or trial".into()),
                }
            }
        }
        if self.objective.is_some_and(|v| !v.is_finite()) {
            out.push("objective not finite".into());
        }
        out
    }
}
