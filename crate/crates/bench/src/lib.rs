//! Shared fixtures for the criterion benches.

use editforge_core::audio::{mix, synth::sine, AudioClip, DATASET_CHANNELS, DATASET_SAMPLE_RATE};

/// A stereo dataset-rate clip of three partials with a gated overtone.
pub fn texture(seconds: f64, base_hz: f64) -> AudioClip {
    let sr = DATASET_SAMPLE_RATE;
    let mut clip = sine(base_hz, 0.3, seconds, sr, DATASET_CHANNELS);
    for (k, amp) in [(2.0, 0.15), (3.7, 0.08)] {
        clip = mix(&clip, &sine(base_hz * k, amp, seconds, sr, DATASET_CHANNELS), 0.0).expect("same shape");
    }
    let gate = (sr as f64 * 0.25) as usize;
    clip.map_channels(|ch| ch.iter().enumerate().map(|(i, &x)| if (i / gate) % 2 == 0 { x } else { x * 0.5 }).collect())
}
