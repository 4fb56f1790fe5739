//! Audio representation, persistence and signal-analysis primitives.
//!
//! Every other module exchanges audio as an [`AudioClip`]: one or two
//! equal-length channels of 32-bit float samples plus a sample rate.

mod analysis;
mod clip;
mod resample;
pub mod synth;
mod wav;

pub use analysis::{dominant_frequency, rms, rms_db_ratio};
pub(crate) use clip::mix_at;
pub use clip::{concat, mix, AudioClip};
pub use resample::{resample, resample_samples};
pub use wav::{load_wav, probe_wav, read_wav, save_wav, save_wav_with, write_wav, WavEncoding, WavInfo};

/// Sample rate of every persisted dataset clip.
pub const DATASET_SAMPLE_RATE: u32 = 44_100;

/// Channel count of every persisted dataset clip.
pub const DATASET_CHANNELS: usize = 2;
