use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};

use super::periodic_hann;

/// Magnitude spectrum of one analysis frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrame {
    /// `fft_size / 2 + 1` non-negative bin magnitudes.
    pub magnitudes: Vec<f64>,
    pub bin_hz: f64,
    pub fft_size: usize,
    pub hop: usize,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static WINDOWS: RefCell<HashMap<usize, Rc<Vec<f64>>>> = RefCell::new(HashMap::new());
}

fn cached_window(size: usize) -> Rc<Vec<f64>> {
    WINDOWS.with(|w| w.borrow_mut().entry(size).or_insert_with(|| Rc::new(periodic_hann(size))).clone())
}

/// Forward FFT plan from a per-thread planner, which caches plans by size.
pub(crate) fn forward_plan(size: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(size))
}

/// Hann-windowed STFT magnitudes of `signal`.
///
/// Frames start at multiples of `hop`; the tail is zero padded so every
/// sample is covered and a short signal still yields one frame.
pub fn stft_magnitudes(signal: &[f32], fft_size: usize, hop: usize, sample_rate: u32) -> Vec<SpectralFrame> {
    assert!(fft_size >= 2 && hop >= 1);
    let frames = if signal.len() <= fft_size {
        1
    } else {
        1 + (signal.len() - fft_size).div_ceil(hop)
    };
    let window = cached_window(fft_size);
    let fft = forward_plan(fft_size);
    let bin_hz = sample_rate as f64 / fft_size as f64;
    let mut buf = vec![Complex::new(0.0, 0.0); fft_size];
    (0..frames)
        .map(|f| {
            let start = f * hop;
            for (j, slot) in buf.iter_mut().enumerate() {
                let s = signal.get(start + j).copied().unwrap_or(0.0) as f64;
                *slot = Complex::new(s * window[j], 0.0);
            }
            fft.process(&mut buf);
            SpectralFrame {
                magnitudes: buf[..fft_size / 2 + 1].iter().map(|c| c.norm_sqr().sqrt()).collect(),
                bin_hz,
                fft_size,
                hop,
            }
        })
        .collect()
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters (`n_mels` rows of `fft_size / 2 + 1` weights)
/// spanning 0 Hz to Nyquist.
pub fn mel_filterbank(n_mels: usize, fft_size: usize, sample_rate: u32) -> Vec<Vec<f64>> {
    let bins = fft_size / 2 + 1;
    let nyquist = sample_rate as f64 / 2.0;
    let max_mel = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(max_mel * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bin_hz = sample_rate as f64 / fft_size as f64;
    (0..n_mels)
        .map(|m| {
            let (lo, centre, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * bin_hz;
                    if f <= lo || f >= hi {
                        0.0
                    } else if f <= centre {
                        (f - lo) / (centre - lo)
                    } else {
                        (hi - f) / (hi - centre)
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_count_and_shape() {
        let frames = stft_magnitudes(&vec![0.0; 5000], 1024, 256, 44_100);
        assert_eq!(frames.len(), 1 + (5000 - 1024usize).div_ceil(256));
        assert!(frames.iter().all(|f| f.magnitudes.len() == 513));
        assert_eq!(stft_magnitudes(&[0.5; 10], 1024, 256, 44_100).len(), 1);
    }

    #[test]
    fn tone_peaks_in_its_bin() {
        let sig: Vec<f32> = (0..4096)
            .map(|i| (std::f64::consts::TAU * 1000.0 * i as f64 / 8000.0).sin() as f32)
            .collect();
        let frames = stft_magnitudes(&sig, 512, 128, 8000);
        let f = &frames[3];
        let peak = f
            .magnitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(peak as f64 * f.bin_hz, 1000.0);
    }

    #[test]
    fn filterbank_is_non_negative_and_covers_midband() {
        let fb = mel_filterbank(64, 1024, 44_100);
        assert_eq!(fb.len(), 64);
        assert!(fb.iter().flatten().all(|&w| (0.0..=1.0).contains(&w)));
        assert!(fb[32].iter().any(|&w| w > 0.5));
    }
}
