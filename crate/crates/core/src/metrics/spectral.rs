use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::{Direction, MetricValue};
use crate::audio::AudioClip;
use crate::dsp::{mel_filterbank, stft_magnitudes};
use crate::error::{Error, Result};

/// Floor applied to magnitudes before taking logarithms.
pub const LOG_FLOOR: f64 = 1e-7;
/// SI-SDR and SI-SNR saturate at +/- this many dB.
pub const SI_CAP_DB: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
}

/// One mel resolution: analysis window length and band count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MelScale {
    pub fft_size: usize,
    pub n_mels: usize,
}

/// Analysis resolutions shared by the spectral losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StftConfig {
    /// Strictly increasing window lengths.
    pub fft_sizes: Vec<usize>,
    /// Hop as a fraction of the window, in `(0, 1]`.
    pub hop_ratio: f64,
    pub window: WindowKind,
    pub mel_scales: Vec<MelScale>,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            fft_sizes: vec![512, 1024, 2048],
            hop_ratio: 0.25,
            window: WindowKind::Hann,
            mel_scales: vec![
                MelScale { fft_size: 1024, n_mels: 64 },
                MelScale { fft_size: 2048, n_mels: 128 },
            ],
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fft_sizes.is_empty() {
            return Err(Error::Config("fft_sizes must not be empty".into()));
        }
        if self.fft_sizes.windows(2).any(|w| w[0] >= w[1]) || self.fft_sizes[0] < 2 {
            return Err(Error::Config("fft_sizes must be strictly increasing and >= 2".into()));
        }
        if !(self.hop_ratio > 0.0 && self.hop_ratio <= 1.0) {
            return Err(Error::Config(format!("hop_ratio {} outside (0, 1]", self.hop_ratio)));
        }
        if self.mel_scales.is_empty() || self.mel_scales.iter().any(|m| m.fft_size < 2 || m.n_mels == 0) {
            return Err(Error::Config("mel_scales must be non-empty with positive sizes".into()));
        }
        Ok(())
    }

    pub fn hop(&self, fft_size: usize) -> usize {
        ((fft_size as f64 * self.hop_ratio).round() as usize).max(1)
    }

    /// Resolution used by the single-resolution [`stft_loss`].
    pub fn primary_fft_size(&self) -> usize {
        self.fft_sizes[self.fft_sizes.len() / 2]
    }
}

/// Channel pairs of equal length: per channel when counts match, otherwise
/// mono mixdowns. The shorter signal is zero padded.
fn aligned(reference: &AudioClip, estimate: &AudioClip) -> Result<Vec<(Vec<f32>, Vec<f32>)>> {
    if reference.sample_rate() != estimate.sample_rate() {
        return Err(Error::Incompatible(format!(
            "sample rates differ ({} Hz vs {} Hz)",
            reference.sample_rate(),
            estimate.sample_rate()
        )));
    }
    if reference.is_empty() || estimate.is_empty() {
        return Err(Error::UndefinedInput("empty clip".into()));
    }
    let len = reference.len().max(estimate.len());
    let pad = |mut v: Vec<f32>| {
        v.resize(len, 0.0);
        v
    };
    Ok(if reference.num_channels() == estimate.num_channels() {
        reference
            .channels()
            .iter()
            .zip(estimate.channels())
            .map(|(a, b)| (pad(a.clone()), pad(b.clone())))
            .collect()
    } else {
        vec![(pad(reference.mono_mixdown()), pad(estimate.mono_mixdown()))]
    })
}

fn spectrogram(signal: &[f32], fft_size: usize, hop: usize, rate: u32) -> Vec<Vec<f64>> {
    stft_magnitudes(signal, fft_size, hop, rate)
        .into_iter()
        .map(|f| f.magnitudes)
        .collect()
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// The two terms of the single-resolution STFT loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftLossTerms {
    /// `||S_ref - S_est||_F / ||S_ref||_F`.
    pub spectral_convergence: f64,
    /// Mean absolute difference of natural-log magnitudes.
    pub log_magnitude: f64,
}

impl StftLossTerms {
    pub fn total(&self) -> f64 {
        self.spectral_convergence + self.log_magnitude
    }
}

/// STFT loss terms at one window length, averaged over channels.
pub fn stft_loss_terms(reference: &AudioClip, estimate: &AudioClip, fft_size: usize, hop: usize) -> Result<StftLossTerms> {
    let rate = reference.sample_rate();
    let pairs = aligned(reference, estimate)?;
    let mut sc = 0.0;
    let mut mag = 0.0;
    for (r, e) in &pairs {
        let sr = spectrogram(r, fft_size, hop, rate);
        let se = spectrogram(e, fft_size, hop, rate);
        let (mut diff, mut norm, mut l1, mut count) = (0.0, 0.0, 0.0, 0usize);
        for (fr, fe) in sr.iter().zip(&se) {
            for (&a, &b) in fr.iter().zip(fe) {
                diff += (a - b) * (a - b);
                norm += a * a;
                l1 += (a.max(LOG_FLOOR).ln() - b.max(LOG_FLOOR).ln()).abs();
                count += 1;
            }
        }
        sc += if diff == 0.0 { 0.0 } else { diff.sqrt() / norm.sqrt().max(LOG_FLOOR) };
        mag += l1 / count as f64;
    }
    let n = pairs.len() as f64;
    Ok(StftLossTerms {
        spectral_convergence: sc / n,
        log_magnitude: mag / n,
    })
}

/// STFT loss at one explicit window length.
pub fn stft_loss_at(reference: &AudioClip, estimate: &AudioClip, fft_size: usize, config: &StftConfig) -> Result<MetricValue> {
    let terms = stft_loss_terms(reference, estimate, fft_size, config.hop(fft_size))?;
    Ok(MetricValue::new("stft", terms.total(), Direction::LowerBetter))
}

/// Spectral convergence plus log-magnitude L1 at the config's middle resolution.
pub fn stft_loss(reference: &AudioClip, estimate: &AudioClip, config: &StftConfig) -> Result<MetricValue> {
    config.validate()?;
    stft_loss_at(reference, estimate, config.primary_fft_size(), config)
}

/// Mean of [`stft_loss_at`] over every configured resolution.
pub fn mr_stft_loss(reference: &AudioClip, estimate: &AudioClip, config: &StftConfig) -> Result<MetricValue> {
    config.validate()?;
    let values = config
        .fft_sizes
        .iter()
        .map(|&n| stft_loss_at(reference, estimate, n, config).map(|m| m.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(MetricValue::new("mr_stft", mean(values), Direction::LowerBetter))
}

/// A mel filter stored as its first non-zero bin and the weights from there.
struct SparseFilter {
    start: usize,
    weights: Vec<f64>,
}

thread_local! {
    static BANKS: RefCell<HashMap<(usize, usize, u32), Rc<Vec<SparseFilter>>>> = RefCell::new(HashMap::new());
}

fn cached_bank(n_mels: usize, fft_size: usize, rate: u32) -> Rc<Vec<SparseFilter>> {
    BANKS.with(|b| {
        b.borrow_mut()
            .entry((n_mels, fft_size, rate))
            .or_insert_with(|| Rc::new(sparse_bank(mel_filterbank(n_mels, fft_size, rate))))
            .clone()
    })
}

fn sparse_bank(bank: Vec<Vec<f64>>) -> Vec<SparseFilter> {
    bank.into_iter()
        .map(|w| {
            let start = w.iter().position(|&x| x != 0.0).unwrap_or(0);
            let end = w.iter().rposition(|&x| x != 0.0).map_or(start, |e| e + 1);
            SparseFilter { start, weights: w[start..end].to_vec() }
        })
        .collect()
}

fn log_mel(spec: &[Vec<f64>], bank: &[SparseFilter]) -> Vec<Vec<f64>> {
    spec.iter()
        .map(|frame| {
            bank.iter()
                .map(|f| {
                    let e: f64 = f.weights.iter().zip(&frame[f.start..]).map(|(a, b)| a * b).sum();
                    e.max(LOG_FLOOR).log10()
                })
                .collect()
        })
        .collect()
}

/// Mean over mel scales of the L1 distance between log10 mel spectrograms.
pub fn ms_mel_loss(reference: &AudioClip, estimate: &AudioClip, config: &StftConfig) -> Result<MetricValue> {
    config.validate()?;
    let rate = reference.sample_rate();
    let pairs = aligned(reference, estimate)?;
    let per_scale = config.mel_scales.iter().map(|scale| {
        let bank = cached_bank(scale.n_mels, scale.fft_size, rate);
        let hop = config.hop(scale.fft_size);
        mean(pairs.iter().map(|(r, e)| {
            let a = log_mel(&spectrogram(r, scale.fft_size, hop, rate), &bank);
            let b = log_mel(&spectrogram(e, scale.fft_size, hop, rate), &bank);
            mean(
                a.iter()
                    .zip(&b)
                    .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())),
            )
        }))
    });
    Ok(MetricValue::new("ms_mel", mean(per_scale.collect::<Vec<_>>()), Direction::LowerBetter))
}

/// Log spectral distance at the largest configured resolution: mean over
/// frames of the RMS difference of log10 power spectra.
pub fn lsd(reference: &AudioClip, estimate: &AudioClip, config: &StftConfig) -> Result<MetricValue> {
    config.validate()?;
    let rate = reference.sample_rate();
    let fft = *config.fft_sizes.last().expect("validated non-empty");
    let hop = config.hop(fft);
    let pairs = aligned(reference, estimate)?;
    let power_log = |m: f64| (m.max(LOG_FLOOR) * m.max(LOG_FLOOR)).log10();
    let value = mean(pairs.iter().map(|(r, e)| {
        let a = spectrogram(r, fft, hop, rate);
        let b = spectrogram(e, fft, hop, rate);
        mean(a.iter().zip(&b).map(|(fa, fb)| {
            mean(fa.iter().zip(fb).map(|(&x, &y)| (power_log(x) - power_log(y)).powi(2))).sqrt()
        }))
    }));
    Ok(MetricValue::new("lsd", value, Direction::LowerBetter))
}

fn flat_pair(reference: &AudioClip, estimate: &AudioClip) -> Result<(Vec<f64>, Vec<f64>)> {
    let pairs = aligned(reference, estimate)?;
    let mut r = Vec::new();
    let mut e = Vec::new();
    for (a, b) in pairs {
        r.extend(a.iter().map(|&x| x as f64));
        e.extend(b.iter().map(|&x| x as f64));
    }
    Ok((r, e))
}

fn scale_invariant_ratio(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    let ref_energy: f64 = reference.iter().map(|x| x * x).sum();
    if ref_energy == 0.0 {
        return Err(Error::UndefinedInput("silent reference".into()));
    }
    let alpha = reference.iter().zip(estimate).map(|(s, e)| s * e).sum::<f64>() / ref_energy;
    let (mut target, mut noise) = (0.0, 0.0);
    for (s, e) in reference.iter().zip(estimate) {
        let t = alpha * s;
        target += t * t;
        noise += (e - t) * (e - t);
    }
    let db = if noise == 0.0 {
        SI_CAP_DB
    } else if target == 0.0 {
        -SI_CAP_DB
    } else {
        10.0 * (target / noise).log10()
    };
    Ok(db.clamp(-SI_CAP_DB, SI_CAP_DB))
}

/// Scale-invariant signal-to-distortion ratio in dB, capped at +/-100.
pub fn si_sdr(reference: &AudioClip, estimate: &AudioClip) -> Result<MetricValue> {
    let (r, e) = flat_pair(reference, estimate)?;
    Ok(MetricValue::new("si_sdr", scale_invariant_ratio(&r, &e)?, Direction::HigherBetter))
}

/// As [`si_sdr`] after removing each signal's mean.
pub fn si_snr(reference: &AudioClip, estimate: &AudioClip) -> Result<MetricValue> {
    let (mut r, mut e) = flat_pair(reference, estimate)?;
    for v in [&mut r, &mut e] {
        let m = mean(v.iter().copied());
        v.iter_mut().for_each(|x| *x -= m);
    }
    Ok(MetricValue::new("si_snr", scale_invariant_ratio(&r, &e)?, Direction::HigherBetter))
}
