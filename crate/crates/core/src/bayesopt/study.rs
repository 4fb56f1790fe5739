use serde::{Deserialize, Serialize};

use super::backend::{GeneratorBackend, P2PRequest, ZetaRequest};
use super::space::{P2PParams, P2PSpace, SearchSpace, ZetaParams, ZetaSpace};
use super::tpe::{Observation, TpeConfig, TpeSampler};
use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::metrics::{Embedder, StftConfig};
use crate::objective::{score_pair, MetricReport, ObjectiveWeights};
use crate::prompts::{CandidateConfig, PromptTriplet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub trials: usize,
    pub search_steps: u32,
    /// Re-render the best trial at this many steps; `None` keeps the trial output.
    pub final_steps: Option<u32>,
    pub seed: u64,
    pub weights: ObjectiveWeights,
    pub stft: StftConfig,
    pub tpe: TpeConfig,
}

impl StudyConfig {
    pub fn p2p_default() -> Self {
        Self {
            trials: 10,
            search_steps: 50,
            final_steps: Some(100),
            seed: 0,
            weights: ObjectiveWeights::default(),
            stft: StftConfig::default(),
            tpe: TpeConfig::default(),
        }
    }

    pub fn zeta_default() -> Self {
        Self {
            trials: 7,
            search_steps: 70,
            final_steps: None,
            ..Self::p2p_default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trial budget must be >= 1".into()));
        }
        if self.search_steps == 0 || self.final_steps == Some(0) {
            return Err(Error::Config("step counts must be > 0".into()));
        }
        self.weights.validate()?;
        self.stft.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrialParams {
    P2p(P2PParams),
    Zeta(ZetaParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum TrialOutcome {
    Scored { report: MetricReport, objective: f64 },
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub params: TrialParams,
    pub seed: u64,
    pub steps: u32,
    pub outcome: TrialOutcome,
}

impl TrialRecord {
    pub fn objective(&self) -> Option<f64> {
        match self.outcome {
            TrialOutcome::Scored { objective, .. } => Some(objective),
            TrialOutcome::Failed { .. } => None,
        }
    }

    pub fn report(&self) -> Option<&MetricReport> {
        match &self.outcome {
            TrialOutcome::Scored { report, .. } => Some(report),
            TrialOutcome::Failed { .. } => None,
        }
    }
}

/// Trial log plus the audio chosen at the end of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult<A> {
    pub trials: Vec<TrialRecord>,
    pub best_index: usize,
    /// Steps used for the returned audio.
    pub final_steps: u32,
    pub final_report: MetricReport,
    pub final_objective: f64,
    pub audio: A,
}

impl<A> StudyResult<A> {
    pub fn best(&self) -> &TrialRecord {
        &self.trials[self.best_index]
    }
}

/// `(input, output)` from a joint generation.
pub type P2PStudy = StudyResult<(AudioClip, AudioClip)>;
pub type ZetaStudy = StudyResult<AudioClip>;

/// Highest objective, earliest trial on ties; `None` if every trial failed.
pub fn best_trial(trials: &[TrialRecord]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for t in trials {
        if let Some(v) = t.objective() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((t.index, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

struct Evaluated<A> {
    audio: A,
    report: MetricReport,
    objective: f64,
}

fn run_study<S, A>(
    space: &S,
    config: &StudyConfig,
    seed: u64,
    wrap: impl Fn(S::Params) -> TrialParams,
    mut eval: impl FnMut(S::Params, u32) -> Result<Evaluated<A>>,
) -> Result<StudyResult<A>>
where
    S: SearchSpace,
{
    config.validate()?;
    let mut sampler = TpeSampler::new(space.dim(), config.tpe, config.seed);
    let mut history = Vec::with_capacity(config.trials);
    let mut trials = Vec::with_capacity(config.trials);
    let mut best: Option<(f64, S::Params, Evaluated<A>)> = None;

    for index in 0..config.trials {
        let params = sampler.suggest(space, &history)?;
        let outcome = match eval(params, config.search_steps) {
            Ok(e) => {
                let out = TrialOutcome::Scored { report: e.report, objective: e.objective };
                if best.as_ref().is_none_or(|(b, _, _)| e.objective > *b) {
                    best = Some((e.objective, params, e));
                }
                out
            }
            Err(e) => {
                log::warn!("trial {index} failed: {e}");
                TrialOutcome::Failed { error: e.to_string() }
            }
        };
        history.push(Observation { unit: space.to_unit(&params), objective: trials_objective(&outcome) });
        trials.push(TrialRecord { index, params: wrap(params), seed, steps: config.search_steps, outcome });
    }

    let Some((_, best_params, best_eval)) = best else {
        return Err(Error::StudyFailed(
            trials
                .iter()
                .map(|t| match &t.outcome {
                    TrialOutcome::Failed { error } => format!("trial {}: {error}", t.index),
                    TrialOutcome::Scored { .. } => unreachable!(),
                })
                .collect(),
        ));
    };
    let best_index = best_trial(&trials).expect("a scored trial exists");
    let (final_steps, chosen) = match config.final_steps {
        Some(steps) => (steps, eval(best_params, steps)?),
        None => (config.search_steps, best_eval),
    };
    Ok(StudyResult {
        trials,
        best_index,
        final_steps,
        final_report: chosen.report,
        final_objective: chosen.objective,
        audio: chosen.audio,
    })
}

fn trials_objective(outcome: &TrialOutcome) -> Option<f64> {
    match outcome {
        TrialOutcome::Scored { objective, .. } => Some(*objective),
        TrialOutcome::Failed { .. } => None,
    }
}

/// Searches attention-injection parameters for one caption pair.
///
/// Every trial reuses the candidate's seed and guidance scale so trials
/// differ only in the searched parameters.
pub fn run_p2p_study(
    prompt: &PromptTriplet,
    candidate: &CandidateConfig,
    backend: &dyn GeneratorBackend,
    embedder: &dyn Embedder,
    config: &StudyConfig,
) -> Result<P2PStudy> {
    prompt.validate()?;
    let space = P2PSpace::default();
    run_study(&space, config, candidate.seed, TrialParams::P2p, |params, steps| {
        let request = P2PRequest {
            in_caption: prompt.input_caption.clone(),
            out_caption: prompt.output_caption.clone(),
            negative_in: prompt.negative_input.clone(),
            negative_out: prompt.negative_output.clone(),
            seed: candidate.seed,
            cfg: candidate.cfg,
            steps,
            params,
        };
        let (a, b) = backend.p2p_edit(&request)?;
        let (report, objective) = score_pair(
            &a,
            &b,
            &prompt.input_caption,
            &prompt.output_caption,
            embedder,
            &config.stft,
            &config.weights,
        )?;
        Ok(Evaluated { audio: (a, b), report, objective })
    })
}

/// Searches inversion parameters for editing an existing clip.
pub fn run_zeta_study(
    prompt: &PromptTriplet,
    in_audio: &AudioClip,
    backend: &dyn GeneratorBackend,
    embedder: &dyn Embedder,
    config: &StudyConfig,
) -> Result<ZetaStudy> {
    prompt.validate()?;
    if in_audio.is_empty() {
        return Err(Error::UndefinedInput("inversion needs non-empty input audio".into()));
    }
    let space = ZetaSpace::default();
    run_study(&space, config, config.seed, TrialParams::Zeta, |params, steps| {
        let request = ZetaRequest {
            in_audio: in_audio.clone(),
            in_caption: prompt.input_caption.clone(),
            out_caption: prompt.output_caption.clone(),
            negative_out: prompt.negative_output.clone(),
            seed: config.seed,
            steps,
            params,
        };
        let out = backend.zeta_edit(&request)?;
        let (report, objective) = score_pair(
            in_audio,
            &out,
            &prompt.input_caption,
            &prompt.output_caption,
            embedder,
            &config.stft,
            &config.weights,
        )?;
        Ok(Evaluated { audio: out, report, objective })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesopt::synthetic::{make_synthetic_backend, CallKind};
    use crate::metrics::BandEmbedder;
    use crate::objective::evaluate_objective;

    fn prompt() -> PromptTriplet {
        PromptTriplet {
            input_caption: "rain falls on a tin roof".into(),
            edit_instruction: "add thunder".into(),
            output_caption: "rain falls on a tin roof with thunder".into(),
            element_count: 1,
            negative_input: Some("thunder".into()),
            negative_output: None,
            source_dataset: "test".into(),
        }
    }

    fn candidate() -> CandidateConfig {
        CandidateConfig { seed: 11, cfg: 5.0, judge_scores: (8, 8), mean_clap: 0.5 }
    }

    #[test]
    fn budget_one_returns_that_trial() {
        let b = make_synthetic_backend("bowl").unwrap();
        let cfg = StudyConfig { trials: 1, ..StudyConfig::p2p_default() };
        let s = run_p2p_study(&prompt(), &candidate(), &b, &BandEmbedder::default(), &cfg).unwrap();
        assert_eq!(s.trials.len(), 1);
        assert_eq!(s.best_index, 0);
    }

    #[test]
    fn p2p_budget_and_final_render() {
        let b = make_synthetic_backend("bowl").unwrap();
        let s = run_p2p_study(&prompt(), &candidate(), &b, &BandEmbedder::default(), &StudyConfig::p2p_default())
            .unwrap();
        let calls = b.calls();
        assert_eq!(calls.len(), 11);
        assert!(calls[..10].iter().all(|c| c.kind == CallKind::P2p && c.steps == 50 && c.seed == 11));
        assert_eq!(calls[10].steps, 100);
        assert_eq!(s.final_steps, 100);
        for t in &s.trials {
            let TrialParams::P2p(p) = t.params else { panic!() };
            assert!(P2PSpace::default().is_feasible(&p));
            let v = evaluate_objective(t.report().unwrap(), &ObjectiveWeights::default()).unwrap();
            assert!((v - t.objective().unwrap()).abs() < 1e-9);
            assert!(s.best().objective().unwrap() >= t.objective().unwrap());
        }
    }

    #[test]
    fn all_failing_lists_every_trial() {
        let b = make_synthetic_backend("failing").unwrap();
        let err = run_p2p_study(&prompt(), &candidate(), &b, &BandEmbedder::default(), &StudyConfig::p2p_default())
            .unwrap_err();
        match err {
            Error::StudyFailed(list) => {
                assert_eq!(list.len(), 10);
                assert!(list[3].starts_with("trial 3:"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn plateau_picks_first_trial() {
        let b = make_synthetic_backend("plateau").unwrap();
        let s = run_p2p_study(&prompt(), &candidate(), &b, &BandEmbedder::default(), &StudyConfig::p2p_default())
            .unwrap();
        let first = s.trials[0].objective().unwrap();
        assert!(s.trials.iter().all(|t| (t.objective().unwrap() - first).abs() < 1e-9));
        assert_eq!(s.best_index, 0);
    }

    #[test]
    fn zeta_replays_and_keeps_integer_t() {
        let b = make_synthetic_backend("bowl").unwrap();
        let input = b.render("rain falls on a tin roof", None, 1, 1.0, 13_230, 2);
        let cfg = StudyConfig::zeta_default().with_seed(4);
        let e = BandEmbedder::default();
        let s1 = run_zeta_study(&prompt(), &input, &b, &e, &cfg).unwrap();
        let s2 = run_zeta_study(&prompt(), &input, &b, &e, &cfg).unwrap();
        assert_eq!(s1.trials, s2.trials);
        assert_eq!(s1.trials.len(), 7);
        assert!(b.calls().iter().all(|c| c.kind == CallKind::Zeta && c.steps == 70));
        for t in &s1.trials {
            let TrialParams::Zeta(p) = t.params else { panic!() };
            assert!((18..=65).contains(&p.t_start));
        }
    }
}
