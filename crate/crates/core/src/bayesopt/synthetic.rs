//! A deterministic generator whose output quality is a known function of
//! the search parameters.
//!
//! Captions are rendered as tone scenes: one sine per content word at the
//! centre of the band that word hashes to under [`BandLayout`], so the mock
//! embedder scores a faithful render as matching its caption. Edits are
//! degraded by a quality factor `q` in `[0, 1]`: caption tones are scaled by
//! `q` and a spurious tone of amplitude `2 (1 - q)` times the tone level is
//! added in a band the caption does not use.
//!
//! Profiles:
//! * `bowl`: `q = 1 - |(x - c) / span|`, the Euclidean distance to the
//!   optimum `c` ([`P2P_OPTIMUM`] or [`ZETA_OPTIMUM`]) with each axis scaled
//!   by its search range. The objective falls off roughly quadratically in
//!   that distance near the peak.
//! * `plateau`: `q = 1` everywhere, so every trial ties.
//! * `failing`: every call returns a backend error.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::backend::{GenerateRequest, GeneratorBackend, P2PRequest, ZetaRequest};
use super::space::{P2PParams, P2PSpace, ZetaParams, ZetaSpace};
use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::metrics::mock::content_words;
use crate::metrics::BandLayout;

pub const P2P_OPTIMUM: P2PParams = P2PParams {
    frac: 0.6,
    delay: 0.2,
    weight: 1.4,
};

pub const ZETA_OPTIMUM: ZetaParams = ZetaParams {
    cfg_src: 2.0,
    cfg_tar: 6.5,
    t_start: 40,
};

const TONE_AMPLITUDE: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticProfile {
    Bowl,
    Plateau,
    Failing,
}

impl FromStr for SyntheticProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bowl" => Ok(Self::Bowl),
            "plateau" => Ok(Self::Plateau),
            "failing" => Ok(Self::Failing),
            other => Err(Error::Config(format!(
                "unknown synthetic profile {other:?} (expected bowl, plateau or failing)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallKind {
    Generate,
    P2p,
    Zeta,
}

/// One backend invocation, for budget assertions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendCall {
    pub kind: CallKind,
    pub seed: u64,
    pub steps: u32,
}

pub struct SyntheticBackend {
    profile: SyntheticProfile,
    layout: BandLayout,
    sample_rate: u32,
    seconds: f64,
    calls: Mutex<Vec<BackendCall>>,
}

/// Builds the synthetic backend for a named profile.
pub fn make_synthetic_backend(profile: &str) -> Result<SyntheticBackend> {
    Ok(SyntheticBackend::new(profile.parse()?))
}

fn mix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^ (x >> 33)
}

fn bowl(deviations: [f64; 3]) -> f64 {
    1.0 - deviations.iter().map(|d| d * d).sum::<f64>().sqrt()
}

impl SyntheticBackend {
    pub fn new(profile: SyntheticProfile) -> Self {
        Self {
            profile,
            layout: BandLayout::default(),
            sample_rate: crate::audio::DATASET_SAMPLE_RATE,
            seconds: 0.3,
            calls: Mutex::new(Vec::new()),
        }
    }

    /// Clip length of generated (non-inversion) audio.
    pub fn with_seconds(mut self, seconds: f64) -> Self {
        self.seconds = seconds;
        self
    }

    pub fn profile(&self) -> SyntheticProfile {
        self.profile
    }

    pub fn calls(&self) -> Vec<BackendCall> {
        self.calls.lock().expect("call log poisoned").clone()
    }

    pub fn clear_calls(&self) {
        self.calls.lock().expect("call log poisoned").clear();
    }

    fn record(&self, kind: CallKind, seed: u64, steps: u32) -> Result<()> {
        self.calls.lock().expect("call log poisoned").push(BackendCall { kind, seed, steps });
        match self.profile {
            SyntheticProfile::Failing => Err(Error::Backend(format!("synthetic failure ({kind:?}, seed {seed})"))),
            _ => Ok(()),
        }
    }

    pub fn p2p_quality(&self, p: &P2PParams) -> f64 {
        match self.profile {
            SyntheticProfile::Bowl => {
                let s = P2PSpace::default();
                let span = |(lo, hi): (f64, f64)| hi - lo;
                bowl([
                    (p.frac - P2P_OPTIMUM.frac) / span(s.frac),
                    (p.delay - P2P_OPTIMUM.delay) / span(s.delay),
                    (p.weight - P2P_OPTIMUM.weight) / span(s.weight),
                ])
            }
            _ => 1.0,
        }
    }

    pub fn zeta_quality(&self, p: &ZetaParams) -> f64 {
        match self.profile {
            SyntheticProfile::Bowl => {
                let s = ZetaSpace::default();
                let span = |(lo, hi): (f64, f64)| hi - lo;
                bowl([
                    (p.cfg_src - ZETA_OPTIMUM.cfg_src) / span(s.cfg_src),
                    (p.cfg_tar - ZETA_OPTIMUM.cfg_tar) / span(s.cfg_tar),
                    (p.t_start as f64 - ZETA_OPTIMUM.t_start as f64) / (s.t_start.1 - s.t_start.0) as f64,
                ])
            }
            _ => 1.0,
        }
    }

    /// Band -> tone count for a caption minus any negative-caption words.
    fn caption_bands(&self, caption: &str, negative: Option<&str>) -> BTreeMap<usize, usize> {
        let banned = negative.map(content_words).unwrap_or_default();
        let mut bands = BTreeMap::new();
        for word in content_words(caption).into_iter().filter(|w| !banned.contains(w)) {
            *bands.entry(self.layout.band_of(&word)).or_insert(0) += 1;
        }
        bands
    }

    /// Renders a caption's tone scene at quality `q`.
    pub fn render(
        &self,
        caption: &str,
        negative: Option<&str>,
        seed: u64,
        quality: f64,
        len: usize,
        channels: usize,
    ) -> AudioClip {
        let q = quality.clamp(0.0, 1.0);
        let bands = self.caption_bands(caption, negative);
        let d = self.layout.len();
        let mut tones: Vec<(f64, f64, f64)> = bands
            .iter()
            .map(|(&b, &count)| (b, TONE_AMPLITUDE * count as f64 * q))
            .map(|(b, a)| (self.layout.centres()[b], a, self.phase(seed, b)))
            .collect();
        if q < 1.0 {
            let start = bands.keys().max().map_or(0, |m| m + d / 2);
            let spurious = (0..d).map(|k| (start + k) % d).find(|b| !bands.contains_key(b)).unwrap_or(0);
            tones.push((
                self.layout.centres()[spurious],
                2.0 * TONE_AMPLITUDE * (1.0 - q),
                self.phase(seed, spurious),
            ));
        }
        let rate = self.sample_rate as f64;
        let mut acc = vec![0.0f64; len];
        for &(f, a, ph) in &tones {
            // Rotating phasor; drift over a few seconds is far below f32 resolution.
            let (ds, dc) = (std::f64::consts::TAU * f / rate).sin_cos();
            let (mut s, mut c) = ph.sin_cos();
            for x in acc.iter_mut() {
                *x += a * s;
                (s, c) = (s * dc + c * ds, c * dc - s * ds);
            }
        }
        let samples: Vec<f32> = acc.into_iter().map(|x| x as f32).collect();
        AudioClip::new(vec![samples; channels], self.sample_rate).expect("valid synthetic clip")
    }

    fn phase(&self, seed: u64, band: usize) -> f64 {
        (mix64(seed ^ mix64(band as u64 + 1)) >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU
    }

    fn default_len(&self) -> usize {
        (self.seconds * self.sample_rate as f64).round() as usize
    }
}

impl GeneratorBackend for SyntheticBackend {
    fn name(&self) -> String {
        format!("synthetic/{:?}", self.profile).to_lowercase()
    }

    fn generate(&self, r: &GenerateRequest) -> Result<AudioClip> {
        self.record(CallKind::Generate, r.seed, r.steps)?;
        Ok(self.render(&r.caption, r.negative_caption.as_deref(), r.seed, 1.0, self.default_len(), 2))
    }

    fn p2p_edit(&self, r: &P2PRequest) -> Result<(AudioClip, AudioClip)> {
        self.record(CallKind::P2p, r.seed, r.steps)?;
        let len = self.default_len();
        let input = self.render(&r.in_caption, r.negative_in.as_deref(), r.seed, 1.0, len, 2);
        let q = self.p2p_quality(&r.params);
        let output = self.render(&r.out_caption, r.negative_out.as_deref(), r.seed, q, len, 2);
        Ok((input, output))
    }

    fn zeta_edit(&self, r: &ZetaRequest) -> Result<AudioClip> {
        self.record(CallKind::Zeta, r.seed, r.steps)?;
        let q = self.zeta_quality(&r.params);
        Ok(self.render(
            &r.out_caption,
            r.negative_out.as_deref(),
            r.seed,
            q,
            r.in_audio.len(),
            r.in_audio.num_channels(),
        ))
    }
}
