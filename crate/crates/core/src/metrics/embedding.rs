use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Probability floor applied before KL and IS logarithms.
pub const PROB_FLOOR: f64 = 1e-10;
/// Deltas shorter than this carry no direction.
pub const ZERO_NORM: f64 = 1e-9;

/// Joint audio/text embedding model.
pub trait Embedder: Send + Sync {
    /// Identity recorded in manifests.
    fn name(&self) -> String;
    fn dimension(&self) -> usize;
    fn embed_audio(&self, clip: &AudioClip) -> Result<Vec<f64>>;
    fn embed_text(&self, text: &str) -> Result<Vec<f64>>;
}

/// Audio tagger exposing class probabilities and a feature layer.
pub trait Classifier: Send + Sync {
    fn name(&self) -> String;
    fn num_classes(&self) -> usize;
    /// Non-negative, sums to one.
    fn class_probabilities(&self, clip: &AudioClip) -> Result<Vec<f64>>;
    /// Penultimate-layer features used for Frechet distance.
    fn features(&self, clip: &AudioClip) -> Result<Vec<f64>>;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cosine similarity clamped to `[-1, 1]`; zero when either vector is (near) zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Incompatible(format!(
            "embedding dimensions differ ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let (aa, bb) = (dot(a, a), dot(b, b));
    if aa.sqrt() < ZERO_NORM || bb.sqrt() < ZERO_NORM {
        return Ok(0.0);
    }
    Ok((dot(a, b) / (aa * bb).sqrt()).clamp(-1.0, 1.0))
}

/// Cosine between the audio delta and the text delta.
pub fn direction_similarity(audio_in: &[f64], audio_out: &[f64], text_in: &[f64], text_out: &[f64]) -> Result<f64> {
    let da: Vec<f64> = audio_out.iter().zip(audio_in).map(|(o, i)| o - i).collect();
    let dt: Vec<f64> = text_out.iter().zip(text_in).map(|(o, i)| o - i).collect();
    if audio_in.len() != audio_out.len() || text_in.len() != text_out.len() {
        return Err(Error::Incompatible("embedding dimensions differ".into()));
    }
    cosine_similarity(&da, &dt)
}

/// Agreement between the output audio and its caption.
pub fn clap_out(out_audio: &AudioClip, out_caption: &str, embedder: &dyn Embedder) -> Result<f64> {
    cosine_similarity(&embedder.embed_audio(out_audio)?, &embedder.embed_text(out_caption)?)
}

/// Whether the audio moved in the direction the captions moved.
pub fn clap_dir(
    in_audio: &AudioClip,
    out_audio: &AudioClip,
    in_caption: &str,
    out_caption: &str,
    embedder: &dyn Embedder,
) -> Result<f64> {
    direction_similarity(
        &embedder.embed_audio(in_audio)?,
        &embedder.embed_audio(out_audio)?,
        &embedder.embed_text(in_caption)?,
        &embedder.embed_text(out_caption)?,
    )
}

/// Audio-to-audio similarity of the pair.
pub fn clap_sim(in_audio: &AudioClip, out_audio: &AudioClip, embedder: &dyn Embedder) -> Result<f64> {
    cosine_similarity(&embedder.embed_audio(in_audio)?, &embedder.embed_audio(out_audio)?)
}

/// Sample mean and (N - 1 normalised) covariance of a set of embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingStats {
    pub mean: Vec<f64>,
    /// Row-major, symmetric.
    pub covariance: Vec<Vec<f64>>,
    pub count: usize,
}

impl EmbeddingStats {
    pub fn from_vectors(vectors: &[Vec<f64>]) -> Result<Self> {
        if vectors.len() < 2 {
            return Err(Error::UndefinedInput(format!(
                "statistics need at least 2 embeddings, got {}",
                vectors.len()
            )));
        }
        let d = vectors[0].len();
        if vectors.iter().any(|v| v.len() != d) {
            return Err(Error::Incompatible("embedding dimensions differ".into()));
        }
        let n = vectors.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| vectors.iter().map(|v| v[j]).sum::<f64>() / n).collect();
        let mut covariance = vec![vec![0.0; d]; d];
        for v in vectors {
            for i in 0..d {
                let di = v[i] - mean[i];
                for j in i..d {
                    covariance[i][j] += di * (v[j] - mean[j]);
                }
            }
        }
        for i in 0..d {
            for j in i..d {
                covariance[i][j] /= n - 1.0;
                covariance[j][i] = covariance[i][j];
            }
        }
        Ok(Self {
            mean,
            covariance,
            count: vectors.len(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.mean.len()
    }

    fn covariance_matrix(&self) -> DMatrix<f64> {
        let d = self.dimension();
        DMatrix::from_fn(d, d, |i, j| 0.5 * (self.covariance[i][j] + self.covariance[j][i]))
    }
}

/// Embeds every clip and summarises the embeddings.
pub fn collect_stats(clips: &[AudioClip], embed: impl Fn(&AudioClip) -> Result<Vec<f64>>) -> Result<EmbeddingStats> {
    if clips.len() < 2 {
        return Err(Error::UndefinedInput(format!(
            "statistics need at least 2 clips, got {}",
            clips.len()
        )));
    }
    let vectors = clips.iter().map(embed).collect::<Result<Vec<_>>>()?;
    EmbeddingStats::from_vectors(&vectors)
}

/// Square root of a symmetric PSD matrix; eigenvalues below `-tol` are an error.
fn psd_sqrt(m: DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m);
    if let Some(&min) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -tol {
            return Err(Error::Numeric(format!("matrix is not PSD (eigenvalue {min:.3e})")));
        }
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// Frechet distance between two gaussians fitted to embedding sets.
pub fn frechet_distance(a: &EmbeddingStats, b: &EmbeddingStats) -> Result<f64> {
    if a.dimension() != b.dimension() {
        return Err(Error::Incompatible(format!(
            "dimensions differ ({} vs {})",
            a.dimension(),
            b.dimension()
        )));
    }
    let (sa, sb) = (a.covariance_matrix(), b.covariance_matrix());
    let scale = sa.trace().abs().max(sb.trace().abs()).max(1.0);
    let tol = 1e-6 * scale;
    let root_a = psd_sqrt(sa.clone(), tol)?;
    psd_sqrt(sb.clone(), tol)?;
    let inner = &root_a * &sb * &root_a;
    let inner = (&inner + inner.transpose()) * 0.5;
    let eig = SymmetricEigen::new(inner);
    if let Some(&min) = eig.eigenvalues.iter().min_by(|x, y| x.total_cmp(y)) {
        if min < -tol * scale {
            return Err(Error::Numeric(format!("cross term is not PSD (eigenvalue {min:.3e})")));
        }
    }
    let trace_sqrt: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let diff = DVector::from_column_slice(&a.mean) - DVector::from_column_slice(&b.mean);
    let fd = diff.norm_squared() + sa.trace() + sb.trace() - 2.0 * trace_sqrt;
    Ok(fd.max(0.0))
}

fn floored(p: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = p.iter().map(|&x| x.max(PROB_FLOOR)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * (a / b).ln()).sum::<f64>().max(0.0)
}

/// Mean `KL(reference || estimate)` over paired probability vectors.
pub fn kl_divergence(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::UndefinedInput("no probability pairs".into()));
    }
    let mut total = 0.0;
    for (p, q) in pairs {
        if p.len() != q.len() {
            return Err(Error::Incompatible(format!(
                "probability vectors differ in length ({} vs {})",
                p.len(),
                q.len()
            )));
        }
        total += kl(&floored(p), &floored(q));
    }
    Ok(total / pairs.len() as f64)
}

/// `exp(mean_x KL(p(y|x) || p(y)))` over one set of class distributions.
pub fn inception_score(probs: &[Vec<f64>]) -> Result<f64> {
    if probs.len() < 2 {
        return Err(Error::UndefinedInput(format!(
            "inception score needs at least 2 distributions, got {}",
            probs.len()
        )));
    }
    let k = probs[0].len();
    if probs.iter().any(|p| p.len() != k) {
        return Err(Error::Incompatible("probability vectors differ in length".into()));
    }
    let rows: Vec<Vec<f64>> = probs.iter().map(|p| floored(p)).collect();
    let n = rows.len() as f64;
    let marginal: Vec<f64> = (0..k).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let mean_kl = rows.iter().map(|r| kl(r, &marginal)).sum::<f64>() / n;
    Ok(mean_kl.exp())
}

/// Inception score over `splits` contiguous chunks, as (mean, population std).
pub fn inception_score_splits(probs: &[Vec<f64>], splits: usize) -> Result<(f64, f64)> {
    let splits = splits.max(1);
    let size = probs.len() / splits;
    if size < 2 {
        return Err(Error::UndefinedInput(format!(
            "{} distributions cannot fill {splits} splits of at least 2",
            probs.len()
        )));
    }
    let scores = (0..splits)
        .map(|i| {
            let end = if i + 1 == splits { probs.len() } else { (i + 1) * size };
            inception_score(&probs[i * size..end])
        })
        .collect::<Result<Vec<_>>>()?;
    let m = scores.iter().sum::<f64>() / scores.len() as f64;
    let var = scores.iter().map(|s| (s - m).powi(2)).sum::<f64>() / scores.len() as f64;
    Ok((m, var.sqrt()))
}
