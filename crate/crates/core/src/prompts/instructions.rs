use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::llm::{complete_structured, InstructionResponse, LlmClient, LlmTask, RetryPolicy};
use crate::edits::{EditParams, EditTask};
use crate::error::{Error, Result};

/// Probability of each optional rewriting stage.
pub const STAGE_PROBABILITY: f64 = 0.5;

/// Which optional stages run after the initial generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StagePlan {
    pub variation: bool,
    pub minimization: bool,
}

impl StagePlan {
    /// Draws both stages independently.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let variation = rng.random_bool(STAGE_PROBABILITY);
        let minimization = rng.random_bool(STAGE_PROBABILITY);
        Self { variation, minimization }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionTrace {
    pub plan: StagePlan,
    pub initial: String,
    pub variation: Option<String>,
    pub minimization: Option<String>,
}

impl InstructionTrace {
    /// Output of the last stage that ran.
    pub fn instruction(&self) -> &str {
        self.minimization.as_deref().or(self.variation.as_deref()).unwrap_or(&self.initial)
    }
}

fn task_description(task: EditTask) -> &'static str {
    match task {
        EditTask::Add => "A second sound is mixed on top of the first recording.",
        EditTask::Replace => "One sound inside a mixture is swapped for a different sound.",
        EditTask::Drop => "One sound is taken out of a mixture, leaving the rest.",
        EditTask::Swap => "Two back-to-back recordings trade places in time.",
        EditTask::Loop => "The recording is played several times in a row.",
        EditTask::Pitch => "The recording is transposed up or down in semitones.",
        EditTask::Speed => "The recording is played faster or slower.",
        EditTask::LowPass => "Frequencies above 8 kHz are filtered out.",
        EditTask::HighPass => "Frequencies below 1 kHz are filtered out.",
        EditTask::Inpaint => "A silent gap in the recording is filled back in.",
        EditTask::SuperRes => "A band-limited recording is restored to full bandwidth.",
        EditTask::Denoise => "Background hiss is removed from the recording.",
    }
}

fn few_shot(task: EditTask) -> Vec<(&'static [&'static str], &'static str)> {
    match task {
        EditTask::Add => vec![(&["rain on a window", "a kettle whistling"], "Add a whistling kettle to the rain")],
        EditTask::Drop => vec![(&["traffic and a siren", "a siren"], "Take the siren out")],
        EditTask::Pitch => vec![(&["a woman singing"], "Make the singing two semitones higher")],
        _ => Vec::new(),
    }
}

fn stage(llm: &dyn LlmClient, task: LlmTask, payload: serde_json::Value, policy: RetryPolicy) -> Result<String> {
    let r: InstructionResponse = complete_structured(llm, task, payload, policy, |r: &InstructionResponse| {
        if r.instruction.trim().is_empty() {
            Err(Error::Validation("empty instruction".into()))
        } else {
            Ok(())
        }
    })?;
    Ok(r.instruction.trim().to_string())
}

/// Runs the initial stage and whichever optional stages `plan` enables.
pub fn run_instruction_stages(
    task: EditTask,
    params: &EditParams,
    captions: &[String],
    llm: &dyn LlmClient,
    plan: StagePlan,
    policy: RetryPolicy,
) -> Result<InstructionTrace> {
    if params.task() != task {
        return Err(Error::Validation(format!("params for {} given to {task}", params.task())));
    }
    if captions.len() != task.arity() {
        return Err(Error::Validation(format!("{task} needs {} captions, got {}", task.arity(), captions.len())));
    }
    let examples: Vec<_> =
        few_shot(task).into_iter().map(|(c, i)| json!({ "captions": c, "instruction": i })).collect();
    let initial = stage(
        llm,
        LlmTask::Instruction,
        json!({
            "task": task.name(),
            "description": task_description(task),
            "captions": captions,
            "parameter": params.describe(),
            "params": params,
            "examples": examples,
        }),
        policy,
    )?;
    let variation = if plan.variation {
        Some(stage(llm, LlmTask::Variation, json!({ "instruction": initial }), policy)?)
    } else {
        None
    };
    let minimization = if plan.minimization {
        let input = variation.as_deref().unwrap_or(&initial);
        Some(stage(llm, LlmTask::Minimization, json!({ "instruction": input }), policy)?)
    } else {
        None
    };
    Ok(InstructionTrace { plan, initial, variation, minimization })
}

/// Draws a stage plan from `rng` and runs it.
pub fn generate_instruction<R: Rng + ?Sized>(
    task: EditTask,
    params: &EditParams,
    captions: &[String],
    llm: &dyn LlmClient,
    rng: &mut R,
) -> Result<InstructionTrace> {
    let plan = StagePlan::sample(rng);
    run_instruction_stages(task, params, captions, llm, plan, RetryPolicy::default())
}
