//! Phase vocoder time stretching and pitch shifting.

use std::f64::consts::{PI, TAU};

use rustfft::{num_complex::Complex, FftPlanner};

use super::periodic_hann;
use crate::audio::resample_samples;

const FRAME: usize = 2048;
const SYNTHESIS_HOP: usize = FRAME / 4;

fn wrap_phase(x: f64) -> f64 {
    x - TAU * ((x + PI) / TAU).floor()
}

/// Stretches `input` in time by `factor` without changing its pitch.
///
/// The output has `round(len * factor)` samples. Frames are centred on
/// their hop positions so the first and last samples are reconstructed
/// from half-windows and normalised by the accumulated window energy.
pub fn time_stretch(input: &[f32], factor: f64) -> Vec<f32> {
    assert!(factor > 0.0 && factor.is_finite(), "stretch factor must be positive");
    let out_len = (input.len() as f64 * factor).round() as usize;
    if input.is_empty() || out_len == 0 {
        return vec![0.0; out_len];
    }
    if (factor - 1.0).abs() < 1e-12 {
        return input.to_vec();
    }

    let n = FRAME;
    let half = n / 2;
    let bins = n / 2 + 1;
    let analysis_hop = SYNTHESIS_HOP as f64 / factor;
    let window = periodic_hann(n);
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let frames = out_len.div_ceil(SYNTHESIS_HOP) + 1;
    let mut out = vec![0.0f64; out_len + n];
    let mut norm = vec![0.0f64; out_len + n];
    let mut prev_phase = vec![0.0f64; bins];
    let mut synth_phase = vec![0.0f64; bins];
    let mut prev_centre = 0isize;
    let mut buf = vec![Complex::new(0.0, 0.0); n];

    for m in 0..frames {
        let centre = (m as f64 * analysis_hop).round() as isize;
        for (j, slot) in buf.iter_mut().enumerate() {
            let idx = centre - half as isize + j as isize;
            let s = if idx >= 0 && (idx as usize) < input.len() {
                input[idx as usize] as f64
            } else {
                0.0
            };
            *slot = Complex::new(s * window[j], 0.0);
        }
        fft.process(&mut buf);

        let hop = (centre - prev_centre) as f64;
        for k in 0..bins {
            let phase = buf[k].arg();
            if m == 0 || hop <= 0.0 {
                synth_phase[k] = phase;
            } else {
                let omega = TAU * k as f64 / n as f64;
                let deviation = wrap_phase(phase - prev_phase[k] - omega * hop);
                let inst = omega + deviation / hop;
                synth_phase[k] += inst * SYNTHESIS_HOP as f64;
            }
            prev_phase[k] = phase;
        }
        prev_centre = centre;

        for k in 0..bins {
            let mag = buf[k].norm();
            buf[k] = Complex::from_polar(mag, synth_phase[k]);
        }
        for k in 1..n - bins + 1 {
            buf[n - k] = buf[k].conj();
        }
        buf[0].im = 0.0;
        buf[n / 2].im = 0.0;
        ifft.process(&mut buf);

        // Output frame m covers [m*hop - half, m*hop + half); shift by `half`.
        let start = m * SYNTHESIS_HOP;
        for j in 0..n {
            let pos = start + j;
            if pos < half || pos - half >= out_len {
                continue;
            }
            let w = window[j];
            out[pos - half] += buf[j].re / n as f64 * w;
            norm[pos - half] += w * w;
        }
    }

    out.truncate(out_len);
    out.iter()
        .zip(&norm)
        .map(|(&o, &w)| if w > 1e-6 { (o / w) as f32 } else { 0.0 })
        .collect()
}

/// Shifts pitch by `semitones` while keeping the length of `input`.
pub fn pitch_shift(input: &[f32], semitones: f64) -> Vec<f32> {
    if semitones == 0.0 || input.is_empty() {
        return input.to_vec();
    }
    let factor = 2f64.powf(semitones / 12.0);
    let stretched = time_stretch(input, factor);
    resample_samples(&stretched, 1.0 / factor, input.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{dominant_frequency, rms, synth::sine, AudioClip};

    fn tone(freq: f64, seconds: f64) -> Vec<f32> {
        sine(freq, 0.5, seconds, 44_100, 1).channel(0).to_vec()
    }

    fn peak_hz(samples: Vec<f32>) -> f64 {
        dominant_frequency(&AudioClip::mono(samples, 44_100).unwrap()).unwrap()
    }

    #[test]
    fn stretch_length_and_pitch() {
        for factor in [1.0 / 3.0, 0.5, 1.7, 3.0] {
            let out = time_stretch(&tone(440.0, 2.0), factor);
            assert_eq!(out.len(), (88_200.0 * factor).round() as usize);
            let f = peak_hz(out);
            assert!((f / 440.0 - 1.0).abs() < 0.02, "factor {factor}: {f}");
        }
    }

    #[test]
    fn stretch_preserves_level() {
        let out = time_stretch(&tone(1000.0, 1.0), 1.5);
        let mid = &out[4096..out.len() - 4096];
        assert!((rms(mid) / (0.5 / 2f64.sqrt()) - 1.0).abs() < 0.05);
    }

    #[test]
    fn octave_up_doubles_frequency() {
        let out = pitch_shift(&tone(440.0, 1.0), 12.0);
        assert_eq!(out.len(), 44_100);
        let f = peak_hz(out);
        assert!((f / 880.0 - 1.0).abs() < 0.02, "{f}");
    }

    #[test]
    fn octave_down_halves_frequency() {
        let f = peak_hz(pitch_shift(&tone(880.0, 1.0), -12.0));
        assert!((f / 440.0 - 1.0).abs() < 0.02, "{f}");
    }
}
