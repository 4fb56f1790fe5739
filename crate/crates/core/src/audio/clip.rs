use crate::error::{ConstraintError, Error, Result};

/// A PCM buffer of one or two channels.
///
/// All channels share the same length; `sample_rate` is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    channels: Vec<Vec<f32>>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(channels: Vec<Vec<f32>>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::Validation("sample rate must be positive".into()));
        }
        if channels.is_empty() || channels.len() > 2 {
            return Err(Error::Unsupported(format!(
                "{} channels (expected 1 or 2)",
                channels.len()
            )));
        }
        let len = channels[0].len();
        if channels.iter().any(|c| c.len() != len) {
            return Err(Error::Validation("channels differ in length".into()));
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![samples], sample_rate)
    }

    pub fn stereo(left: Vec<f32>, right: Vec<f32>, sample_rate: u32) -> Result<Self> {
        Self::new(vec![left, right], sample_rate)
    }

    pub fn silence(channels: usize, sample_rate: u32, len: usize) -> Result<Self> {
        Self::new(vec![vec![0.0; len]; channels], sample_rate)
    }

    /// Builds a clip whose every channel carries `f(sample_index)`.
    pub fn from_fn(
        channels: usize,
        sample_rate: u32,
        len: usize,
        f: impl Fn(usize) -> f32,
    ) -> Result<Self> {
        let data: Vec<f32> = (0..len).map(f).collect();
        Self::new(vec![data; channels], sample_rate)
    }

    pub fn channels(&self) -> &[Vec<f32>] {
        &self.channels
    }

    pub fn channel(&self, index: usize) -> &[f32] {
        &self.channels[index]
    }

    pub fn into_channels(self) -> Vec<Vec<f32>> {
        self.channels
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    /// Number of samples spanning `seconds` at this clip's rate.
    pub fn samples_for(&self, seconds: f64) -> usize {
        (seconds * self.sample_rate as f64).round().max(0.0) as usize
    }

    /// Channel mean.
    pub fn mono_mixdown(&self) -> Vec<f32> {
        if self.channels.len() == 1 {
            return self.channels[0].clone();
        }
        let scale = 1.0 / self.channels.len() as f32;
        (0..self.len())
            .map(|i| self.channels.iter().map(|c| c[i]).sum::<f32>() * scale)
            .collect()
    }

    pub fn to_stereo(&self) -> AudioClip {
        match self.channels.len() {
            2 => self.clone(),
            _ => AudioClip {
                channels: vec![self.channels[0].clone(), self.channels[0].clone()],
                sample_rate: self.sample_rate,
            },
        }
    }

    /// Samples `[start, end)` of every channel.
    pub fn slice(&self, start: usize, end: usize) -> AudioClip {
        let end = end.min(self.len());
        let start = start.min(end);
        AudioClip {
            channels: self.channels.iter().map(|c| c[start..end].to_vec()).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Applies `f` to each channel; `f` must preserve length.
    pub fn map_channels(&self, mut f: impl FnMut(&[f32]) -> Vec<f32>) -> AudioClip {
        let channels: Vec<Vec<f32>> = self.channels.iter().map(|c| f(c)).collect();
        debug_assert!(channels.windows(2).all(|w| w[0].len() == w[1].len()));
        AudioClip {
            channels,
            sample_rate: self.sample_rate,
        }
    }

    pub fn map_samples(&self, f: impl Fn(f32) -> f32) -> AudioClip {
        self.map_channels(|c| c.iter().map(|&s| f(s)).collect())
    }

    pub fn scaled(&self, gain: f32) -> AudioClip {
        self.map_samples(|s| s * gain)
    }

    pub fn peak(&self) -> f32 {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f32, |m, &s| m.max(s.abs()))
    }

    pub fn energy(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.iter())
            .map(|&s| (s as f64) * (s as f64))
            .sum()
    }

    pub fn is_silent(&self) -> bool {
        self.channels.iter().flatten().all(|&s| s == 0.0)
    }

    /// Clip repeated `times` times back to back.
    pub fn repeated(&self, times: usize) -> AudioClip {
        AudioClip {
            channels: self.channels.iter().map(|c| c.repeat(times)).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Relabels the sample rate without touching the samples.
    pub(crate) fn with_rate(mut self, sample_rate: u32) -> AudioClip {
        self.sample_rate = sample_rate;
        self
    }

    pub(crate) fn check_compatible(&self, other: &AudioClip) -> Result<()> {
        if self.sample_rate != other.sample_rate {
            return Err(Error::Incompatible(format!(
                "sample rates differ ({} Hz vs {} Hz)",
                self.sample_rate, other.sample_rate
            )));
        }
        if self.num_channels() != other.num_channels() {
            return Err(Error::Incompatible(format!(
                "channel counts differ ({} vs {})",
                self.num_channels(),
                other.num_channels()
            )));
        }
        Ok(())
    }
}

/// Mixes `overlay` into `base` starting `offset` seconds in.
///
/// The result has the length of `base`. If the summed signal peaks above
/// 1.0 the whole output is scaled by `1 / peak`.
pub fn mix(base: &AudioClip, overlay: &AudioClip, offset: f64) -> Result<AudioClip> {
    if !(offset >= 0.0) {
        return Err(ConstraintError::single(None, "offset >= 0", offset).into());
    }
    base.check_compatible(overlay)?;
    mix_at(base, overlay, base.samples_for(offset))
}

/// Sample-indexed variant of [`mix`].
pub(crate) fn mix_at(base: &AudioClip, overlay: &AudioClip, start: usize) -> Result<AudioClip> {
    base.check_compatible(overlay)?;
    if start + overlay.len() > base.len() {
        return Err(ConstraintError::single(
            None,
            "offset + len(overlay) <= len(base)",
            format!(
                "{:.4} s",
                (start + overlay.len()) as f64 / base.sample_rate as f64
            ),
        )
        .into());
    }
    let mut channels = base.channels.clone();
    for (out, over) in channels.iter_mut().zip(&overlay.channels) {
        for (o, &v) in out[start..start + over.len()].iter_mut().zip(over) {
            *o += v;
        }
    }
    let mut clip = AudioClip {
        channels,
        sample_rate: base.sample_rate,
    };
    let peak = clip.peak();
    if peak > 1.0 {
        clip = clip.scaled(1.0 / peak);
    }
    Ok(clip)
}

/// `first` followed by `second`.
pub fn concat(first: &AudioClip, second: &AudioClip) -> Result<AudioClip> {
    first.check_compatible(second)?;
    let channels = first
        .channels
        .iter()
        .zip(&second.channels)
        .map(|(a, b)| {
            let mut c = Vec::with_capacity(a.len() + b.len());
            c.extend_from_slice(a);
            c.extend_from_slice(b);
            c
        })
        .collect();
    Ok(AudioClip {
        channels,
        sample_rate: first.sample_rate,
    })
}
