use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Rates how well a clip matches a caption on a 1 to 10 scale.
pub trait JudgeClient: Send + Sync {
    fn name(&self) -> String;
    fn score(&self, audio: &AudioClip, caption: &str) -> Result<u8>;
}

pub const JUDGE_MIN: u8 = 1;
pub const JUDGE_MAX: u8 = 10;

/// Calls the judge and rejects out-of-range scores.
pub fn checked_score(judge: &dyn JudgeClient, audio: &AudioClip, caption: &str) -> Result<u8> {
    let s = judge.score(audio, caption)?;
    if (JUDGE_MIN..=JUDGE_MAX).contains(&s) {
        Ok(s)
    } else {
        Err(Error::Client(format!("{} returned score {s} outside [{JUDGE_MIN}, {JUDGE_MAX}]", judge.name())))
    }
}
