//! Deterministic stand-ins for learned audio/text models.
//!
//! [`BandEmbedder`] maps audio to the amplitude in a set of log-spaced
//! frequency bands and text to a bag of content words hashed onto the same
//! bands, so a caption and a scene of tones placed at its words' band
//! centres embed to the same direction.

use crate::audio::AudioClip;
use crate::dsp::stft_magnitudes;
use crate::error::Result;

use super::embedding::{Classifier, Embedder};

const FFT_SIZE: usize = 8192;
const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "in", "into", "is", "it", "its", "of", "on",
    "or", "that", "the", "then", "this", "to", "while", "with", "some", "there", "sound", "sounds",
];

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Lowercased alphanumeric words that are not stopwords.
pub fn content_words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| w.len() > 1)
        .map(str::to_lowercase)
        .filter(|w| !STOPWORDS.contains(&w.as_str()))
        .collect()
}

/// Log-spaced frequency bands shared by the mock models.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLayout {
    centres: Vec<f64>,
    edges: Vec<f64>,
}

impl BandLayout {
    pub fn new(bands: usize, low_hz: f64, high_hz: f64) -> Self {
        assert!(bands >= 2 && low_hz > 0.0 && high_hz > low_hz);
        let ratio = (high_hz / low_hz).powf(1.0 / (bands - 1) as f64);
        let centres: Vec<f64> = (0..bands).map(|i| low_hz * ratio.powi(i as i32)).collect();
        let half = ratio.sqrt();
        let mut edges = vec![centres[0] / half];
        edges.extend(centres.iter().map(|c| c * half));
        Self { centres, edges }
    }

    pub fn len(&self) -> usize {
        self.centres.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centres.is_empty()
    }

    pub fn centres(&self) -> &[f64] {
        &self.centres
    }

    /// Band a word hashes to.
    pub fn band_of(&self, word: &str) -> usize {
        (fnv1a(word.as_bytes()) % self.len() as u64) as usize
    }

    /// Bands of each content word of `text`, with repetition.
    pub fn text_bands(&self, text: &str) -> Vec<usize> {
        content_words(text).iter().map(|w| self.band_of(w)).collect()
    }

    /// Mean power falling in each band, over all STFT frames of the mixdown.
    pub fn band_energies(&self, clip: &AudioClip) -> Vec<f64> {
        let mono = clip.mono_mixdown();
        let frames = stft_magnitudes(&mono, FFT_SIZE, FFT_SIZE / 2, clip.sample_rate());
        let mut energy = vec![0.0; self.len()];
        for frame in &frames {
            for (k, m) in frame.magnitudes.iter().enumerate() {
                let f = k as f64 * frame.bin_hz;
                if f < self.edges[0] || f >= self.edges[self.len()] {
                    continue;
                }
                let band = self.edges.partition_point(|&e| e <= f) - 1;
                energy[band] += m * m;
            }
        }
        let n = frames.len().max(1) as f64;
        energy.iter_mut().for_each(|e| *e /= n);
        energy
    }
}

impl Default for BandLayout {
    fn default() -> Self {
        Self::new(32, 200.0, 8000.0)
    }
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        v
    } else {
        v.into_iter().map(|x| x / n).collect()
    }
}

/// Band-amplitude audio embedding paired with hashed bag-of-words text.
#[derive(Debug, Clone, Default)]
pub struct BandEmbedder {
    layout: BandLayout,
}

impl BandEmbedder {
    pub fn new(layout: BandLayout) -> Self {
        Self { layout }
    }

    pub fn layout(&self) -> &BandLayout {
        &self.layout
    }
}

impl Embedder for BandEmbedder {
    fn name(&self) -> String {
        format!("mock-band-embedder/{}", self.layout.len())
    }

    fn dimension(&self) -> usize {
        self.layout.len()
    }

    fn embed_audio(&self, clip: &AudioClip) -> Result<Vec<f64>> {
        Ok(unit(self.layout.band_energies(clip).into_iter().map(f64::sqrt).collect()))
    }

    fn embed_text(&self, text: &str) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.layout.len()];
        for b in self.layout.text_bands(text) {
            v[b] += 1.0;
        }
        Ok(unit(v))
    }
}

/// Softmax over log band energies; one class per band.
#[derive(Debug, Clone)]
pub struct BandClassifier {
    layout: BandLayout,
    /// Logit scale applied to `log10` energies.
    pub sharpness: f64,
}

impl Default for BandClassifier {
    fn default() -> Self {
        Self {
            layout: BandLayout::default(),
            sharpness: 2.0,
        }
    }
}

impl BandClassifier {
    pub fn new(layout: BandLayout, sharpness: f64) -> Self {
        Self { layout, sharpness }
    }
}

impl Classifier for BandClassifier {
    fn name(&self) -> String {
        format!("mock-band-classifier/{}", self.layout.len())
    }

    fn num_classes(&self) -> usize {
        self.layout.len()
    }

    fn class_probabilities(&self, clip: &AudioClip) -> Result<Vec<f64>> {
        let logits: Vec<f64> = self.features(clip)?.iter().map(|f| f * self.sharpness).collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let s: f64 = exp.iter().sum();
        Ok(exp.into_iter().map(|e| e / s).collect())
    }

    fn features(&self, clip: &AudioClip) -> Result<Vec<f64>> {
        Ok(self
            .layout
            .band_energies(clip)
            .into_iter()
            .map(|e| (e + 1e-10).log10())
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{mix, synth::sine};
    use crate::metrics::embedding::cosine_similarity;

    #[test]
    fn stopwords_are_dropped() {
        assert_eq!(content_words("The dog, barking in a park!"), ["dog", "barking", "park"]);
    }

    #[test]
    fn tone_scene_matches_its_caption() {
        let e = BandEmbedder::default();
        let caption = "dog barking";
        let bands = e.layout().text_bands(caption);
        let mut scene = AudioClip::silence(1, 44_100, 22_050).unwrap();
        for b in &bands {
            let tone = sine(e.layout().centres()[*b], 0.2, 0.5, 44_100, 1);
            scene = mix(&scene, &tone, 0.0).unwrap();
        }
        let sim = cosine_similarity(&e.embed_audio(&scene).unwrap(), &e.embed_text(caption).unwrap()).unwrap();
        assert!(sim > 0.95, "{sim}");
        let other = cosine_similarity(&e.embed_audio(&scene).unwrap(), &e.embed_text("violin").unwrap()).unwrap();
        assert!(other < sim);
    }

    #[test]
    fn embedding_is_deterministic_and_unit() {
        let e = BandEmbedder::default();
        let c = sine(1000.0, 0.3, 0.3, 22_050, 2);
        let a = e.embed_audio(&c).unwrap();
        assert_eq!(a, e.embed_audio(&c).unwrap());
        assert_eq!(a.len(), e.dimension());
        assert!((a.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn classifier_outputs_distribution() {
        let c = BandClassifier::default();
        let p = c.class_probabilities(&sine(1000.0, 0.3, 0.3, 44_100, 1)).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|&x| x >= 0.0));
        let silent = c.class_probabilities(&AudioClip::silence(1, 44_100, 1000).unwrap()).unwrap();
        assert!(silent.iter().all(|&x| (x - 1.0 / 32.0).abs() < 1e-12));
    }
}
