//! Offline stand-ins for the language model and the audio judge.
//!
//! [`MockLlm`] answers from a small table of worked examples and falls back
//! to fixed rewrite rules, so identical requests always get identical replies.

use std::sync::atomic::{AtomicU32, Ordering};

use serde_json::{json, Value};

use super::judge::JudgeClient;
use super::llm::{LlmClient, LlmRequest, LlmTask};
use crate::audio::AudioClip;
use crate::edits::{EditParams, Position};
use crate::error::{Error, Result};
use crate::metrics::{cosine_similarity, BandEmbedder, Embedder};

const CONNECTORS: [&str; 9] =
    [" and ", " as ", " while ", " with ", " during ", " over ", ", ", " then ", " followed by "];

const ADDITIONS: [&str; 6] =
    ["distant thunder", "a dog barking", "light rain", "church bells ringing", "wind blowing", "a car horn"];

struct TripletExample {
    input: &'static str,
    instruction: &'static str,
    output: &'static str,
    elements: u32,
    negative_input: Option<&'static str>,
    negative_output: Option<&'static str>,
}

const TRIPLET_EXAMPLES: [TripletExample; 5] = [
    TripletExample {
        input: "A man speaks as birds chirp",
        instruction: "Remove the birds chirping",
        output: "A man speaks",
        elements: 2,
        negative_input: None,
        negative_output: Some("birds chirp"),
    },
    TripletExample {
        input: "Thunder and rain",
        instruction: "add distant wind",
        output: "Thunder and rain with distant wind",
        elements: 2,
        negative_input: Some("distant wind"),
        negative_output: None,
    },
    TripletExample {
        input: "A car accelerates",
        instruction: "Change it to a motorcycle",
        output: "A motorcycle accelerates",
        elements: 1,
        negative_input: Some("motorcycle"),
        negative_output: Some("car"),
    },
    TripletExample {
        input: "A plane takes off",
        instruction: "it should be further away",
        output: "A plane takes off in the distance",
        elements: 1,
        negative_input: None,
        negative_output: None,
    },
    TripletExample {
        input: "Birds chirping and water flowing",
        instruction: "Remove the water flowing",
        output: "Birds chirping",
        elements: 2,
        negative_input: None,
        negative_output: Some("water flowing"),
    },
];

const ADD_BASE: &str = "people talking in a roadside cafe";
const ADD_TARGET: &str = "a chirping bird";
const ADD_INITIAL: &str = "Add the sound of a bird chirping to the people talking in a roadside cafe";
const ADD_VARIATION: &str = "Add some chirping birds to the chatter in a roadside cafe";
const ADD_MINIMAL: &str = "Add bird sounds";

fn normalize(s: &str) -> String {
    s.trim().trim_end_matches('.').to_lowercase()
}

fn fnv(s: &str) -> u64 {
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn lower_first(s: &str) -> String {
    let mut c = s.trim().chars();
    c.next().map(|f| f.to_lowercase().chain(c).collect()).unwrap_or_default()
}

fn upper_first(s: &str) -> String {
    let mut c = s.trim().chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// Splits a caption into sound sources at common connectors.
pub fn split_elements(caption: &str) -> Vec<String> {
    let mut parts = vec![caption.trim().trim_end_matches('.').to_lowercase()];
    for sep in CONNECTORS {
        parts = parts.iter().flat_map(|p| p.split(sep).map(str::to_string).collect::<Vec<_>>()).collect();
    }
    parts.into_iter().map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect()
}

pub struct MockLlm {
    faults: AtomicU32,
}

impl Default for MockLlm {
    fn default() -> Self {
        Self::new()
    }
}

impl MockLlm {
    pub fn new() -> Self {
        Self { faults: AtomicU32::new(0) }
    }

    /// The next `n` replies are malformed.
    pub fn with_faults(n: u32) -> Self {
        Self { faults: AtomicU32::new(n) }
    }

    fn triplet(&self, caption: &str) -> Value {
        let key = normalize(caption);
        if let Some(ex) = TRIPLET_EXAMPLES.iter().find(|e| normalize(e.input) == key) {
            return json!({
                "reasoning": "worked example",
                "instruction": ex.instruction,
                "output_caption": ex.output,
                "element_count": ex.elements,
                "negative_input": ex.negative_input,
                "negative_output": ex.negative_output,
            });
        }
        let elements = split_elements(caption);
        let h = fnv(&key);
        if elements.len() >= 2 && h % 2 == 0 {
            let (last, rest) = elements.split_last().expect("two or more");
            json!({
                "reasoning": format!("{} elements; removing the last", elements.len()),
                "instruction": format!("Remove the {}", last.trim_start_matches("the ")),
                "output_caption": upper_first(&rest.join(" and ")),
                "element_count": elements.len(),
                "negative_input": null,
                "negative_output": last,
            })
        } else {
            let sound = (0..ADDITIONS.len())
                .map(|k| ADDITIONS[(h as usize + k) % ADDITIONS.len()])
                .find(|s| !key.contains(s))
                .unwrap_or(ADDITIONS[0]);
            json!({
                "reasoning": format!("{} elements; adding one", elements.len()),
                "instruction": format!("Add {sound}"),
                "output_caption": format!("{} with {sound}", upper_first(caption.trim().trim_end_matches('.'))),
                "element_count": elements.len().max(1),
                "negative_input": sound,
                "negative_output": null,
            })
        }
    }

    fn instruction(&self, payload: &Value) -> Result<Value> {
        let task = payload["task"].as_str().unwrap_or_default();
        let captions: Vec<String> = payload["captions"]
            .as_array()
            .map(|a| a.iter().filter_map(|v| v.as_str()).map(lower_first).collect())
            .unwrap_or_default();
        let params: Option<EditParams> = serde_json::from_value(payload["params"].clone()).ok();
        let cap = |i: usize| captions.get(i).cloned().unwrap_or_else(|| "the audio".into());
        if task == "ADD" && captions.len() == 2 && normalize(&captions[0]) == ADD_BASE && normalize(&captions[1]) == ADD_TARGET
        {
            return Ok(json!({ "instruction": ADD_INITIAL }));
        }
        let text = match (task, params) {
            ("ADD", Some(EditParams::Add { position })) => {
                let at = match position {
                    Position::Start => " at the beginning".to_string(),
                    Position::Middle => " in the middle".to_string(),
                    Position::End => " at the end".to_string(),
                    Position::At(s) => format!(" after {s:.1} seconds"),
                };
                format!("Add {} to {}{at}", cap(1), cap(0))
            }
            ("ADD", _) => format!("Add {} to {}", cap(1), cap(0)),
            ("REPLACE", _) => format!("Replace {} in {} with {}", cap(1), cap(0), cap(2)),
            ("DROP", _) => format!("Remove {} from {}", cap(1), cap(0)),
            ("SWAP", _) => format!("Swap the order of {} and {}", cap(0), cap(1)),
            ("LOOP", Some(EditParams::Loop { count })) => format!("Repeat {} {count} times", cap(0)),
            ("PITCH", Some(EditParams::Pitch { semitones })) if semitones >= 0.0 => {
                format!("Raise the pitch of {} by {semitones:.0} semitones", cap(0))
            }
            ("PITCH", Some(EditParams::Pitch { semitones })) => {
                format!("Lower the pitch of {} by {:.0} semitones", cap(0), -semitones)
            }
            ("SPEED", Some(EditParams::Speed { factor })) if factor >= 1.0 => {
                format!("Speed up {} by {factor:.1} times", cap(0))
            }
            ("SPEED", Some(EditParams::Speed { factor })) => {
                format!("Slow down {} to {:.0} percent speed", cap(0), factor * 100.0)
            }
            ("LOW_PASS", _) => format!("Muffle {} by cutting the high frequencies", cap(0)),
            ("HIGH_PASS", _) => format!("Remove the low frequencies from {}", cap(0)),
            ("INPAINT", _) => format!("Fill in the silent gap in {}", cap(0)),
            ("SUPER_RES", _) => format!("Improve the audio quality of {}", cap(0)),
            ("DENOISE", _) => format!("Remove the background noise from {}", cap(0)),
            (other, p) => {
                return Err(Error::Client(format!("mock llm cannot phrase task {other:?} with {p:?}")));
            }
        };
        Ok(json!({ "instruction": text }))
    }

    fn variation(&self, instruction: &str) -> Value {
        if instruction == ADD_INITIAL {
            return json!({ "instruction": ADD_VARIATION });
        }
        const SWAPS: [(&str, &str); 9] = [
            ("Add ", "Bring in "),
            ("Remove ", "Take out "),
            ("Replace ", "Swap out "),
            ("Repeat ", "Loop "),
            ("Raise ", "Bump up "),
            ("Lower ", "Bring down "),
            ("Muffle ", "Dull "),
            ("Improve ", "Enhance "),
            ("Fill in ", "Restore "),
        ];
        let text = SWAPS
            .iter()
            .find_map(|(from, to)| instruction.strip_prefix(from).map(|rest| format!("{to}{rest}")))
            .unwrap_or_else(|| format!("Please {}", lower_first(instruction)));
        json!({ "instruction": text })
    }

    fn minimization(&self, instruction: &str) -> Value {
        if instruction == ADD_INITIAL || instruction == ADD_VARIATION {
            return json!({ "instruction": ADD_MINIMAL });
        }
        let words: Vec<&str> = instruction.split_whitespace().collect();
        let cut = words
            .iter()
            .enumerate()
            .skip(2)
            .find(|(_, w)| ["to", "from", "in", "with", "by", "at", "after"].contains(w))
            .map_or(words.len(), |(i, _)| i);
        let kept: Vec<&str> = words[..cut]
            .iter()
            .enumerate()
            .filter(|&(i, w)| i == 0 || !["the", "a", "an", "some", "of"].contains(w))
            .map(|(_, w)| *w)
            .collect();
        let text = if kept.len() >= 2 { kept.join(" ") } else { instruction.to_string() };
        json!({ "instruction": text })
    }
}

impl LlmClient for MockLlm {
    fn model(&self) -> String {
        "mock-llm".into()
    }

    fn complete(&self, request: &LlmRequest) -> Result<Value> {
        if self
            .faults
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok()
        {
            return Ok(json!({ "unexpected": "shape" }));
        }
        let text = |key: &str| request.payload[key].as_str().unwrap_or_default().to_string();
        match request.task {
            LlmTask::PromptTriplet => Ok(self.triplet(&text("input_caption"))),
            LlmTask::Instruction => self.instruction(&request.payload),
            LlmTask::Variation => Ok(self.variation(&text("instruction"))),
            LlmTask::Minimization => Ok(self.minimization(&text("instruction"))),
        }
    }
}

/// Scores audio by its embedding similarity to the caption, mapped to 1..=10.
pub struct EmbeddingJudge<E = BandEmbedder> {
    embedder: E,
}

impl Default for EmbeddingJudge {
    fn default() -> Self {
        Self { embedder: BandEmbedder::default() }
    }
}

impl<E: Embedder> EmbeddingJudge<E> {
    pub fn new(embedder: E) -> Self {
        Self { embedder }
    }
}

impl<E: Embedder> JudgeClient for EmbeddingJudge<E> {
    fn name(&self) -> String {
        format!("embedding-judge/{}", self.embedder.name())
    }

    fn score(&self, audio: &AudioClip, caption: &str) -> Result<u8> {
        let cos = cosine_similarity(&self.embedder.embed_audio(audio)?, &self.embedder.embed_text(caption)?)?;
        Ok((1.0 + 9.0 * cos.max(0.0)).round().clamp(1.0, 10.0) as u8)
    }
}
