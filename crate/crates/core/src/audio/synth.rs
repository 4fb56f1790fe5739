//! Deterministic test and scene signals.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::AudioClip;

/// Sine of `freq` Hz lasting `seconds`, identical on every channel.
pub fn sine(freq: f64, amplitude: f32, seconds: f64, sample_rate: u32, channels: usize) -> AudioClip {
    let len = (seconds * sample_rate as f64).round() as usize;
    let w = std::f64::consts::TAU * freq / sample_rate as f64;
    AudioClip::from_fn(channels, sample_rate, len, |i| amplitude * (w * i as f64).sin() as f32)
        .expect("valid sine parameters")
}

/// Independent gaussian noise per channel with standard deviation `std`.
pub fn white_noise<R: Rng + ?Sized>(
    std: f32,
    seconds: f64,
    sample_rate: u32,
    channels: usize,
    rng: &mut R,
) -> AudioClip {
    let len = (seconds * sample_rate as f64).round() as usize;
    let normal = Normal::new(0.0f32, std).expect("finite std");
    let data = (0..channels)
        .map(|_| (0..len).map(|_| normal.sample(rng)).collect())
        .collect();
    AudioClip::new(data, sample_rate).expect("valid noise parameters")
}
