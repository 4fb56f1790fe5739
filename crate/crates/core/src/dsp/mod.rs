//! Filters, time-frequency transforms and the phase vocoder.

mod biquad;
mod stft;
mod vocoder;

pub use biquad::{Biquad, ButterworthCascade, FilterKind};
pub use stft::{mel_filterbank, stft_magnitudes, SpectralFrame};
pub use vocoder::{pitch_shift, time_stretch};

/// Symmetric Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Periodic Hann window of length `n`, the usual choice for STFT frames.
pub fn periodic_hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect()
}
