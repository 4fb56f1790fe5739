//! Band-limited resampling with a Kaiser-windowed sinc kernel.
//!
//! The kernel is tabulated once and linearly interpolated, so arbitrary
//! (including irrational) rate ratios share one code path. With 32 zero
//! crossings per side and beta = 7 the stopband sits below -70 dB and
//! starts just under the lower Nyquist frequency.

use std::sync::OnceLock;

use super::AudioClip;

const ZERO_CROSSINGS: usize = 32;
const TABLE_RESOLUTION: usize = 512;
const KAISER_BETA: f64 = 7.0;
/// -6 dB point as a fraction of the lower Nyquist frequency.
const CUTOFF: f64 = 0.925;

struct SincKernel {
    table: Vec<f64>,
}

impl SincKernel {
    fn new() -> Self {
        let fc = CUTOFF * 0.5;
        let n = ZERO_CROSSINGS * TABLE_RESOLUTION;
        let i0_beta = bessel_i0(KAISER_BETA);
        let table = (0..=n + 1)
            .map(|i| {
                let u = i as f64 / TABLE_RESOLUTION as f64;
                if u >= ZERO_CROSSINGS as f64 {
                    return 0.0;
                }
                let r = u / ZERO_CROSSINGS as f64;
                let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta;
                2.0 * fc * sinc(2.0 * fc * u) * window
            })
            .collect();
        Self { table }
    }

    fn get() -> &'static SincKernel {
        static KERNEL: OnceLock<SincKernel> = OnceLock::new();
        KERNEL.get_or_init(SincKernel::new)
    }

    /// Kernel value at `u` low-rate sample periods from the centre.
    #[inline]
    fn eval(&self, u: f64) -> f64 {
        let pos = u.abs() * TABLE_RESOLUTION as f64;
        let idx = pos as usize;
        if idx >= ZERO_CROSSINGS * TABLE_RESOLUTION {
            return 0.0;
        }
        let frac = pos - idx as f64;
        self.table[idx] + frac * (self.table[idx + 1] - self.table[idx])
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

/// Resamples `input` to exactly `out_len` samples, where output sample `n`
/// sits at input position `n / ratio`.
pub fn resample_samples(input: &[f32], ratio: f64, out_len: usize) -> Vec<f32> {
    assert!(ratio > 0.0 && ratio.is_finite(), "ratio must be positive");
    if input.is_empty() {
        return vec![0.0; out_len];
    }
    let kernel = SincKernel::get();
    let rho = ratio.min(1.0);
    let half_width = ZERO_CROSSINGS as f64 / rho;
    let last = input.len() as isize - 1;
    (0..out_len)
        .map(|n| {
            let x = n as f64 / ratio;
            let lo = ((x - half_width).ceil() as isize).max(0);
            let hi = ((x + half_width).floor() as isize).min(last);
            let mut acc = 0.0f64;
            for i in lo..=hi {
                acc += input[i as usize] as f64 * kernel.eval((i as f64 - x) * rho);
            }
            (acc * rho) as f32
        })
        .collect()
}

/// Converts `clip` to `target_rate`. Equal rates return the clip unchanged.
///
/// The output length is `round(len * target_rate / rate)`.
pub fn resample(clip: &AudioClip, target_rate: u32) -> AudioClip {
    assert!(target_rate > 0, "target rate must be positive");
    if target_rate == clip.sample_rate() {
        return clip.clone();
    }
    let ratio = target_rate as f64 / clip.sample_rate() as f64;
    let out_len = (clip.len() as f64 * ratio).round() as usize;
    let channels = clip
        .channels()
        .iter()
        .map(|c| resample_samples(c, ratio, out_len))
        .collect();
    AudioClip::new(channels, target_rate).expect("resampled channels share length")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{dominant_frequency, synth::sine};

    #[test]
    fn identity_when_rates_match() {
        let clip = sine(440.0, 0.5, 0.1, 44_100, 2);
        assert_eq!(resample(&clip, 44_100), clip);
    }

    #[test]
    fn quarter_rate_length() {
        let clip = AudioClip::silence(2, 44_100, 4 * 44_100).unwrap();
        let down = resample(&clip, 11_025);
        assert_eq!(down.len(), 44_100);
        assert_eq!(down.sample_rate(), 11_025);
    }

    #[test]
    fn tone_keeps_its_frequency() {
        let clip = sine(440.0, 0.5, 1.0, 44_100, 1);
        let down = resample(&clip, 11_025);
        let f = dominant_frequency(&down).unwrap();
        let bin = 11_025.0 / 16_384.0;
        assert!((f - 440.0).abs() <= bin, "{f}");
    }

    #[test]
    fn tone_above_new_nyquist_is_removed() {
        // 7 kHz folds to 4.025 kHz at 11.025 kHz unless filtered.
        let clip = sine(7000.0, 0.5, 1.0, 44_100, 1);
        let down = resample(&clip, 11_025);
        let mid = down.slice(1000, down.len() - 1000);
        let level = crate::audio::rms(mid.channel(0)) / (0.5 / 2f64.sqrt());
        assert!(20.0 * level.log10() < -60.0, "leak {level}");
    }

    #[test]
    fn dc_gain_is_unity() {
        let clip = AudioClip::mono(vec![0.5; 8000], 8000).unwrap();
        for rate in [2000, 3000, 16_000, 44_100] {
            let out = resample(&clip, rate);
            let mid = out.len() / 2;
            assert!((out.channel(0)[mid] - 0.5).abs() < 1e-3, "{rate}: {}", out.channel(0)[mid]);
        }
    }
}
