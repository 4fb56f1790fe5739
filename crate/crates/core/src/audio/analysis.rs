use rustfft::{num_complex::Complex, FftPlanner};

use super::AudioClip;
use crate::dsp::hann_window;
use crate::error::{Error, Result};

/// Frequency (Hz) of the strongest non-DC bin of the Hann-windowed FFT of
/// the mono mixdown. The FFT spans the whole clip, zero-padded to a power
/// of two, so the resolution is `rate / next_pow2(len)`.
pub fn dominant_frequency(clip: &AudioClip) -> Result<f64> {
    let mono = clip.mono_mixdown();
    if mono.iter().all(|&s| s == 0.0) {
        return Err(Error::UndefinedInput("dominant frequency of a silent clip".into()));
    }
    let n = mono.len().next_power_of_two().max(2);
    let window = hann_window(mono.len());
    let mut buf: Vec<Complex<f64>> = mono
        .iter()
        .zip(&window)
        .map(|(&s, &w)| Complex::new(s as f64 * w, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (bin, _) = buf[1..=n / 2]
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1, c.norm_sqr()))
        .fold((1, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best });
    Ok(bin as f64 * clip.sample_rate() as f64 / n as f64)
}

pub fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|&s| (s as f64).powi(2)).sum::<f64>() / samples.len() as f64).sqrt()
}

/// `20 log10(rms(processed) / rms(reference))`.
pub fn rms_db_ratio(processed: &[f32], reference: &[f32]) -> f64 {
    20.0 * (rms(processed) / rms(reference)).log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::synth::sine;

    #[test]
    fn finds_pure_tones() {
        for f in [440.0, 880.0] {
            let clip = sine(f, 0.5, 1.0, 44_100, 2);
            let got = dominant_frequency(&clip).unwrap();
            assert!((got - f).abs() <= 44_100.0 / 65_536.0, "{f} -> {got}");
        }
    }

    #[test]
    fn silence_is_undefined() {
        let clip = AudioClip::silence(2, 44_100, 1000).unwrap();
        assert!(matches!(dominant_frequency(&clip), Err(Error::UndefinedInput(_))));
    }
}
