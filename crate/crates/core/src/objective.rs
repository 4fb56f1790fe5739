//! The weighted pair-quality objective maximised by parameter search.

use serde::{Deserialize, Serialize};

use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::metrics::{cosine_similarity, direction_similarity, ms_mel_loss, Embedder, StftConfig};

/// The four measurements the objective combines.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricReport {
    /// Output audio vs output caption.
    pub m_out: f64,
    /// Audio change vs caption change.
    pub m_dir: f64,
    /// Input audio vs output audio.
    pub m_sim: f64,
    /// Multi-scale mel loss between input and output audio.
    pub m_mel: f64,
}

impl MetricReport {
    pub fn new(m_out: f64, m_dir: f64, m_sim: f64, m_mel: f64) -> Self {
        Self { m_out, m_dir, m_sim, m_mel }
    }

    fn fields(&self) -> [(&'static str, f64); 4] {
        [("m_out", self.m_out), ("m_dir", self.m_dir), ("m_sim", self.m_sim), ("m_mel", self.m_mel)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveWeights {
    pub out: f64,
    pub dir: f64,
    pub sim: f64,
    pub mel: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        Self {
            out: 8.0,
            dir: 14.0,
            sim: 0.5,
            mel: 1.5,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("out", self.out), ("dir", self.dir), ("sim", self.sim), ("mel", self.mel)] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config(format!("weight {name} = {w} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Signed per-term contributions; they sum to the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub out: f64,
    pub dir: f64,
    pub sim: f64,
    pub mel: f64,
}

impl ObjectiveBreakdown {
    pub fn total(&self) -> f64 {
        self.out + self.dir + self.sim + self.mel
    }
}

pub fn objective_breakdown(report: &MetricReport, weights: &ObjectiveWeights) -> Result<ObjectiveBreakdown> {
    if let Some((name, v)) = report.fields().into_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Numeric(format!("{name} is not finite ({v})")));
    }
    weights.validate()?;
    Ok(ObjectiveBreakdown {
        out: weights.out * report.m_out,
        dir: weights.dir * report.m_dir,
        sim: weights.sim * report.m_sim,
        mel: -weights.mel * report.m_mel,
    })
}

/// `w_out m_out + w_dir m_dir + w_sim m_sim - w_mel m_mel`.
pub fn evaluate_objective(report: &MetricReport, weights: &ObjectiveWeights) -> Result<f64> {
    objective_breakdown(report, weights).map(|b| b.total())
}

/// Measures an audio pair against its captions and scores it.
///
/// Each clip and caption is embedded once. Backend failures are wrapped
/// with the name of the metric that needed them.
pub fn score_pair(
    in_audio: &AudioClip,
    out_audio: &AudioClip,
    in_caption: &str,
    out_caption: &str,
    embedder: &dyn Embedder,
    stft: &StftConfig,
    weights: &ObjectiveWeights,
) -> Result<(MetricReport, f64)> {
    let attribute = |metric: &str| {
        let metric = metric.to_string();
        move |e: Error| match e {
            Error::Backend(m) => Error::Backend(format!("{metric}: {m}")),
            Error::Client(m) => Error::Client(format!("{metric}: {m}")),
            other => other,
        }
    };
    let a_in = embedder.embed_audio(in_audio).map_err(attribute("m_sim"))?;
    let a_out = embedder.embed_audio(out_audio).map_err(attribute("m_out"))?;
    let t_in = embedder.embed_text(in_caption).map_err(attribute("m_dir"))?;
    let t_out = embedder.embed_text(out_caption).map_err(attribute("m_out"))?;
    let report = MetricReport {
        m_out: cosine_similarity(&a_out, &t_out)?,
        m_dir: direction_similarity(&a_in, &a_out, &t_in, &t_out)?,
        m_sim: cosine_similarity(&a_in, &a_out)?,
        m_mel: ms_mel_loss(in_audio, out_audio, stft)?.value,
    };
    let objective = evaluate_objective(&report, weights)?;
    Ok((report, objective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::synth::sine;
    use crate::metrics::BandEmbedder;

    #[test]
    fn default_weights() {
        let w = ObjectiveWeights::default();
        assert_eq!((w.out, w.dir, w.sim, w.mel), (8.0, 14.0, 0.5, 1.5));
    }

    #[test]
    fn worked_example() {
        let r = MetricReport::new(0.5, 0.3, 0.8, 2.0);
        let v = evaluate_objective(&r, &ObjectiveWeights::default()).unwrap();
        assert!((v - 5.6).abs() < 1e-12);
        assert_eq!(evaluate_objective(&MetricReport::default(), &ObjectiveWeights::default()).unwrap(), 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        let r = MetricReport::new(f64::NAN, 0.0, 0.0, 0.0);
        assert!(matches!(evaluate_objective(&r, &ObjectiveWeights::default()), Err(Error::Numeric(_))));
        let w = ObjectiveWeights { mel: -1.0, ..Default::default() };
        assert!(evaluate_objective(&MetricReport::default(), &w).is_err());
    }

    #[test]
    fn doubling_a_weight_doubles_its_term() {
        let r = MetricReport::new(0.1, 0.7, 0.2, 0.4);
        let w = ObjectiveWeights::default();
        let w2 = ObjectiveWeights { dir: 2.0 * w.dir, ..w };
        let a = objective_breakdown(&r, &w).unwrap();
        let b = objective_breakdown(&r, &w2).unwrap();
        assert_eq!(b.dir, 2.0 * a.dir);
    }

    #[test]
    fn identical_pair_scores() {
        let e = BandEmbedder::default();
        let x = sine(700.0, 0.3, 0.5, 44_100, 2);
        let (r, obj) =
            score_pair(&x, &x, "a tone", "a tone", &e, &StftConfig::default(), &ObjectiveWeights::default()).unwrap();
        assert_eq!(r.m_sim, 1.0);
        assert_eq!(r.m_mel, 0.0);
        assert_eq!(r.m_dir, 0.0);
        let b = objective_breakdown(&r, &ObjectiveWeights::default()).unwrap();
        assert!((b.total() - obj).abs() < 1e-9);
    }
}
