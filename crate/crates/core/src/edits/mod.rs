//! The twelve deterministic manual edit tasks.
//!
//! Each task turns one to three source clips into an `(input, output)`
//! training pair. Constraint checking lives in [`validate_constraints`],
//! the signal work in the `edit_*` functions, and parameter sampling in
//! [`sample_task`] / [`sample_params`].

mod constraints;
mod ops;
mod sampling;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use constraints::{single_element_slots, validate_constraints, ValidatedRequest};
pub use ops::{
    apply, edit_add, edit_denoise, edit_drop, edit_high_pass, edit_inpaint, edit_loop, edit_low_pass,
    edit_pitch, edit_replace, edit_speed, edit_super_res, edit_swap,
};
pub use sampling::{sample_inpaint_percent, sample_params, sample_speed_factor, sample_task};

use crate::audio::AudioClip;

/// Longest clip any edit may produce, in seconds.
pub const MAX_OUTPUT_SECONDS: f64 = 47.0;
pub const PITCH_RANGE_SEMITONES: f64 = 12.0;
pub const SPEED_MIN: f64 = 1.0 / 3.0;
pub const SPEED_MAX: f64 = 3.0;
pub const INPAINT_MAX_PERCENT: f64 = 95.0;
pub const LOW_PASS_CUTOFF_HZ: f64 = 8000.0;
pub const HIGH_PASS_CUTOFF_HZ: f64 = 1000.0;
pub const FILTER_ORDER: usize = 8;
/// SUPER_RES degrades through a quarter of the original rate.
pub const SUPER_RES_DIVISOR: u32 = 4;
/// Variance of the additive gaussian noise used by DENOISE.
pub const DENOISE_VARIANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EditTask {
    Add,
    Replace,
    Drop,
    Swap,
    Loop,
    Pitch,
    Speed,
    LowPass,
    HighPass,
    Inpaint,
    SuperRes,
    Denoise,
}

impl EditTask {
    pub const ALL: [EditTask; 12] = [
        EditTask::Add,
        EditTask::Replace,
        EditTask::Drop,
        EditTask::Swap,
        EditTask::Loop,
        EditTask::Pitch,
        EditTask::Speed,
        EditTask::LowPass,
        EditTask::HighPass,
        EditTask::Inpaint,
        EditTask::SuperRes,
        EditTask::Denoise,
    ];

    /// Number of source clips the task consumes.
    pub fn arity(self) -> usize {
        match self {
            EditTask::Replace => 3,
            EditTask::Add | EditTask::Drop | EditTask::Swap => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EditTask::Add => "ADD",
            EditTask::Replace => "REPLACE",
            EditTask::Drop => "DROP",
            EditTask::Swap => "SWAP",
            EditTask::Loop => "LOOP",
            EditTask::Pitch => "PITCH",
            EditTask::Speed => "SPEED",
            EditTask::LowPass => "LOW_PASS",
            EditTask::HighPass => "HIGH_PASS",
            EditTask::Inpaint => "INPAINT",
            EditTask::SuperRes => "SUPER_RES",
            EditTask::Denoise => "DENOISE",
        }
    }

    /// Whether the output is a pure function of the inputs and parameter,
    /// so signal-level metrics against a reference are meaningful.
    pub fn is_deterministic(self) -> bool {
        !matches!(
            self,
            EditTask::Replace | EditTask::Drop | EditTask::Inpaint | EditTask::Denoise
        )
    }
}

impl fmt::Display for EditTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EditTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EditTask::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown edit task {s:?}"))
    }
}

/// Insertion point for ADD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "PositionRepr", try_from = "PositionRepr")]
pub enum Position {
    Start,
    Middle,
    End,
    /// Seconds from the start of the base clip.
    At(f64),
}

impl Position {
    /// Offset in samples for a base of `base_len` and target of `target_len`.
    pub fn resolve(self, base_len: usize, target_len: usize, sample_rate: u32) -> Option<usize> {
        let room = base_len.checked_sub(target_len)?;
        match self {
            Position::Start => Some(0),
            Position::Middle => Some(room / 2),
            Position::End => Some(room),
            Position::At(t) if t >= 0.0 && t.is_finite() => {
                let start = (t * sample_rate as f64).round() as usize;
                (start <= room).then_some(start)
            }
            Position::At(_) => None,
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Position::Start => f.write_str("start"),
            Position::Middle => f.write_str("middle"),
            Position::End => f.write_str("end"),
            Position::At(t) => write!(f, "{t:.2}s"),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PositionRepr {
    Keyword(String),
    Seconds(f64),
}

impl From<Position> for PositionRepr {
    fn from(p: Position) -> Self {
        match p {
            Position::At(t) => PositionRepr::Seconds(t),
            other => PositionRepr::Keyword(other.to_string()),
        }
    }
}

impl TryFrom<PositionRepr> for Position {
    type Error = String;

    fn try_from(r: PositionRepr) -> Result<Self, Self::Error> {
        match r {
            PositionRepr::Seconds(t) => Ok(Position::At(t)),
            PositionRepr::Keyword(k) => match k.as_str() {
                "start" => Ok(Position::Start),
                "middle" => Ok(Position::Middle),
                "end" => Ok(Position::End),
                other => Err(format!("unknown position keyword {other:?}")),
            },
        }
    }
}

/// The controllable parameter of a task; parameterless tasks carry none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EditParams {
    Add { position: Position },
    Replace,
    Drop,
    Swap,
    Loop { count: u32 },
    Pitch { semitones: f64 },
    Speed { factor: f64 },
    LowPass,
    HighPass,
    Inpaint { percent: f64 },
    SuperRes,
    Denoise,
}

impl EditParams {
    pub fn task(&self) -> EditTask {
        match self {
            EditParams::Add { .. } => EditTask::Add,
            EditParams::Replace => EditTask::Replace,
            EditParams::Drop => EditTask::Drop,
            EditParams::Swap => EditTask::Swap,
            EditParams::Loop { .. } => EditTask::Loop,
            EditParams::Pitch { .. } => EditTask::Pitch,
            EditParams::Speed { .. } => EditTask::Speed,
            EditParams::LowPass => EditTask::LowPass,
            EditParams::HighPass => EditTask::HighPass,
            EditParams::Inpaint { .. } => EditTask::Inpaint,
            EditParams::SuperRes => EditTask::SuperRes,
            EditParams::Denoise => EditTask::Denoise,
        }
    }

    /// Human-readable parameter value handed to instruction generation.
    pub fn describe(&self) -> Option<String> {
        match self {
            EditParams::Add { position } => Some(position.to_string()),
            EditParams::Loop { count } => Some(count.to_string()),
            EditParams::Pitch { semitones } => Some(format!("{semitones:+.1} semitones")),
            EditParams::Speed { factor } => Some(format!("{factor:.2}x")),
            EditParams::Inpaint { percent } => Some(format!("{percent:.0}%")),
            _ => None,
        }
    }
}

/// An `(input, output)` audio pair produced by one manual edit.
#[derive(Debug, Clone, PartialEq)]
pub struct EditPair {
    pub input_audio: AudioClip,
    pub output_audio: AudioClip,
    pub task: EditTask,
    pub params: EditParams,
    /// Sampled placement (insertion offset or blanked-region start), in samples.
    pub offset_samples: Option<usize>,
    pub source_captions: Vec<String>,
}

impl EditPair {
    pub fn with_captions(mut self, captions: Vec<String>) -> Self {
        self.source_captions = captions;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_tasks_with_fixed_arity() {
        assert_eq!(EditTask::ALL.len(), 12);
        let arities: Vec<usize> = EditTask::ALL.iter().map(|t| t.arity()).collect();
        assert_eq!(arities, [2, 3, 2, 2, 1, 1, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn names_round_trip() {
        for t in EditTask::ALL {
            assert_eq!(t.name().parse::<EditTask>().unwrap(), t);
            let json = serde_json::to_string(&t).unwrap();
            assert_eq!(json, format!("\"{}\"", t.name()));
        }
    }

    #[test]
    fn keyword_resolution() {
        let rate = 10;
        assert_eq!(Position::Start.resolve(100, 20, rate), Some(0));
        assert_eq!(Position::Middle.resolve(100, 20, rate), Some(40));
        assert_eq!(Position::End.resolve(100, 20, rate), Some(80));
        assert_eq!(Position::At(8.0).resolve(100, 20, rate), Some(80));
        assert_eq!(Position::At(8.1).resolve(100, 20, rate), None);
        assert_eq!(Position::At(-0.1).resolve(100, 20, rate), None);
        assert_eq!(Position::Start.resolve(10, 20, rate), None);
    }

    #[test]
    fn params_serialise_with_task_tag() {
        let p = EditParams::Add { position: Position::Middle };
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"task":"ADD","position":"middle"}"#);
        let q: EditParams = serde_json::from_str(r#"{"task":"ADD","position":2.5}"#).unwrap();
        assert_eq!(q, EditParams::Add { position: Position::At(2.5) });
        let r: EditParams = serde_json::from_str(r#"{"task":"DENOISE"}"#).unwrap();
        assert_eq!(r.task(), EditTask::Denoise);
    }
}
