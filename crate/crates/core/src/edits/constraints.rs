use super::{
    EditParams, EditTask, INPAINT_MAX_PERCENT, MAX_OUTPUT_SECONDS, PITCH_RANGE_SEMITONES, SPEED_MAX,
    SPEED_MIN,
};
use crate::audio::AudioClip;
use crate::error::{ConstraintError, ConstraintViolation};

/// A request that passed [`validate_constraints`]; feed it to [`super::apply`].
#[derive(Debug, Clone)]
pub struct ValidatedRequest<'a> {
    pub task: EditTask,
    pub inputs: Vec<&'a AudioClip>,
    pub params: EditParams,
}

fn max_samples(clip: &AudioClip) -> usize {
    (MAX_OUTPUT_SECONDS * clip.sample_rate() as f64).round() as usize
}

fn secs(clip: &AudioClip, samples: usize) -> String {
    format!("{:.3} s", samples as f64 / clip.sample_rate() as f64)
}

/// Input slots that must hold a single sound source, as (slot, role).
pub fn single_element_slots(task: EditTask) -> &'static [(usize, &'static str)] {
    match task {
        EditTask::Replace => &[(1, "target"), (0, "base")],
        EditTask::Drop => &[(1, "target")],
        EditTask::Swap => &[(0, "first"), (1, "second")],
        _ => &[],
    }
}

/// Checks arity, length, element-count and parameter-range constraints.
///
/// `elem_counts` is indexed like `inputs`; a missing or `None` entry means
/// the count is unknown and element constraints on that slot are skipped.
/// All violations are collected, not just the first.
pub fn validate_constraints<'a>(
    task: EditTask,
    inputs: &[&'a AudioClip],
    params: &EditParams,
    elem_counts: &[Option<u32>],
) -> Result<ValidatedRequest<'a>, ConstraintError> {
    let mut v = Vec::new();

    if params.task() != task {
        v.push(ConstraintViolation::new("params match task", params.task()));
    }
    if inputs.len() != task.arity() {
        v.push(ConstraintViolation::new(
            format!("arity = {}", task.arity()),
            inputs.len(),
        ));
        return Err(ConstraintError { task: Some(task), violations: v });
    }

    for &(slot, role) in single_element_slots(task) {
        if let Some(Some(n)) = elem_counts.get(slot) {
            if *n != 1 {
                v.push(ConstraintViolation::new(format!("elem({role}) = 1"), n));
            }
        }
    }

    let len = |i: usize| inputs[i].len();
    match task {
        EditTask::Add | EditTask::Drop => {
            if len(1) > len(0) {
                v.push(ConstraintViolation::new(
                    "len(target) <= len(base)",
                    secs(inputs[1], len(1)),
                ));
            } else if let EditParams::Add { position } = params {
                if position.resolve(len(0), len(1), inputs[0].sample_rate()).is_none() {
                    v.push(ConstraintViolation::new(
                        "t in {start, middle, end} or [0, L - l]",
                        position,
                    ));
                }
            }
        }
        EditTask::Replace => {
            if len(1) > len(0) {
                v.push(ConstraintViolation::new(
                    "len(target) <= len(base)",
                    secs(inputs[1], len(1)),
                ));
            }
            if len(2) > len(0) {
                v.push(ConstraintViolation::new(
                    "len(replacement) <= len(base)",
                    secs(inputs[2], len(2)),
                ));
            }
        }
        EditTask::Swap => {
            let total = len(0) + len(1);
            if total > max_samples(inputs[0]) {
                v.push(ConstraintViolation::new(
                    "len(first) + len(second) <= 47s",
                    secs(inputs[0], total),
                ));
            }
        }
        EditTask::Loop => {
            if let EditParams::Loop { count } = params {
                if *count == 0 {
                    v.push(ConstraintViolation::new("l > 0", count));
                } else {
                    let total = len(0).saturating_mul(*count as usize);
                    if total > max_samples(inputs[0]) {
                        v.push(ConstraintViolation::new(
                            "len(result) <= 47s",
                            secs(inputs[0], total),
                        ));
                    }
                }
            }
        }
        EditTask::Pitch => {
            if let EditParams::Pitch { semitones } = params {
                if !(semitones.abs() <= PITCH_RANGE_SEMITONES) {
                    v.push(ConstraintViolation::new("p in [-12, 12]", semitones));
                }
            }
        }
        EditTask::Speed => {
            if let EditParams::Speed { factor } = params {
                if !(SPEED_MIN - 1e-12..=SPEED_MAX + 1e-12).contains(factor) {
                    v.push(ConstraintViolation::new("s in [1/3, 3]", factor));
                } else {
                    let out = (len(0) as f64 / factor).round() as usize;
                    if out > max_samples(inputs[0]) {
                        v.push(ConstraintViolation::new(
                            "len(result) <= 47s",
                            secs(inputs[0], out),
                        ));
                    }
                }
            }
        }
        EditTask::LowPass => {
            if inputs[0].sample_rate() <= 16_000 {
                v.push(ConstraintViolation::new(
                    "sample_rate > 16000",
                    inputs[0].sample_rate(),
                ));
            }
        }
        EditTask::Inpaint => {
            if let EditParams::Inpaint { percent } = params {
                if !(0.0..=INPAINT_MAX_PERCENT).contains(percent) {
                    v.push(ConstraintViolation::new("alpha in [0, 95]", percent));
                }
            }
        }
        EditTask::HighPass | EditTask::SuperRes | EditTask::Denoise => {}
    }

    // Tasks that keep the input length still must not emit over-long audio.
    let keeps_length = !matches!(task, EditTask::Swap | EditTask::Loop | EditTask::Speed);
    if keeps_length && len(0) > max_samples(inputs[0]) {
        v.push(ConstraintViolation::new("len(result) <= 47s", secs(inputs[0], len(0))));
    }

    if v.is_empty() {
        Ok(ValidatedRequest {
            task,
            inputs: inputs.to_vec(),
            params: params.clone(),
        })
    } else {
        Err(ConstraintError { task: Some(task), violations: v })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edits::Position;

    fn clip(seconds: f64) -> AudioClip {
        AudioClip::silence(1, 1000, (seconds * 1000.0) as usize).unwrap()
    }

    #[test]
    fn drop_with_two_element_target_is_rejected() {
        let (base, target) = (clip(5.0), clip(1.0));
        let err = validate_constraints(
            EditTask::Drop,
            &[&base, &target],
            &EditParams::Drop,
            &[Some(1), Some(2)],
        )
        .unwrap_err();
        assert!(err.violates("elem(target) = 1"));
        assert_eq!(err.task, Some(EditTask::Drop));
        assert_eq!(err.violations[0].value, "2");
    }

    #[test]
    fn swap_of_forty_seconds_is_accepted() {
        let (a, b) = (clip(20.0), clip(20.0));
        let ok = validate_constraints(EditTask::Swap, &[&a, &b], &EditParams::Swap, &[Some(1), Some(1)]);
        assert!(ok.is_ok());
    }

    #[test]
    fn loop_zero_is_rejected() {
        let a = clip(1.0);
        let err = validate_constraints(EditTask::Loop, &[&a], &EditParams::Loop { count: 0 }, &[])
            .unwrap_err();
        assert!(err.violates("l > 0"));
    }

    #[test]
    fn collects_every_violation() {
        let (base, target, repl) = (clip(2.0), clip(3.0), clip(4.0));
        let err = validate_constraints(
            EditTask::Replace,
            &[&base, &target, &repl],
            &EditParams::Replace,
            &[Some(2), Some(3), None],
        )
        .unwrap_err();
        assert_eq!(err.violations.len(), 4);
    }

    #[test]
    fn wrong_arity_and_mismatched_params() {
        let a = clip(1.0);
        let err = validate_constraints(EditTask::Add, &[&a], &EditParams::Swap, &[]).unwrap_err();
        assert!(err.violates("arity = 2"));
        assert!(err.violates("params match task"));
    }

    #[test]
    fn add_position_beyond_room() {
        let (base, target) = (clip(10.0), clip(2.0));
        let p = EditParams::Add { position: Position::At(8.5) };
        assert!(validate_constraints(EditTask::Add, &[&base, &target], &p, &[]).is_err());
        let p = EditParams::Add { position: Position::At(8.0) };
        assert!(validate_constraints(EditTask::Add, &[&base, &target], &p, &[]).is_ok());
    }
}
