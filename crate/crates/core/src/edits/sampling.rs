use rand::Rng;

use super::{
    EditParams, EditTask, Position, INPAINT_MAX_PERCENT, MAX_OUTPUT_SECONDS, PITCH_RANGE_SEMITONES,
    SPEED_MAX, SPEED_MIN,
};
use crate::audio::AudioClip;
use crate::error::ConstraintError;

/// Uniform draw over the twelve tasks.
pub fn sample_task<R: Rng + ?Sized>(rng: &mut R) -> EditTask {
    EditTask::ALL[rng.random_range(0..EditTask::ALL.len())]
}

/// `s ~ LogUnif(1/3, 3)`.
pub fn sample_speed_factor<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    log_uniform(rng, SPEED_MIN, SPEED_MAX)
}

/// `alpha ~ U(0, 95)`.
pub fn sample_inpaint_percent<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.0..=INPAINT_MAX_PERCENT)
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..=hi.ln()).exp()
}

/// Draws a parameter for `task` that satisfies its constraints on `inputs`.
///
/// Length-dependent parameters are drawn from their distribution restricted
/// to the feasible range: LOOP counts up to `floor(47 s / len)` and SPEED
/// factors no slower than `len / 47 s`.
pub fn sample_params<R: Rng + ?Sized>(
    task: EditTask,
    inputs: &[&AudioClip],
    rng: &mut R,
) -> Result<EditParams, ConstraintError> {
    let arity = || ConstraintError::single(Some(task), format!("arity = {}", task.arity()), inputs.len());
    let first = *inputs.first().ok_or_else(arity)?;
    if inputs.len() != task.arity() {
        return Err(arity());
    }
    let secs = first.duration_seconds();
    Ok(match task {
        EditTask::Add => {
            let room = first.len().checked_sub(inputs[1].len()).ok_or_else(|| {
                ConstraintError::single(
                    Some(task),
                    "len(target) <= len(base)",
                    format!("{:.3} s", inputs[1].duration_seconds()),
                )
            })?;
            let position = if rng.random_bool(0.5) {
                [Position::Start, Position::Middle, Position::End][rng.random_range(0..3)]
            } else {
                // Whole samples so the position resolves back to itself.
                let start = rng.random_range(0..=room);
                Position::At(start as f64 / first.sample_rate() as f64)
            };
            EditParams::Add { position }
        }
        EditTask::Loop => {
            let max = (MAX_OUTPUT_SECONDS / secs).floor();
            if !(max >= 1.0) {
                return Err(ConstraintError::single(Some(task), "len(result) <= 47s", format!("{secs:.3} s")));
            }
            EditParams::Loop {
                count: rng.random_range(1..=max.min(u32::MAX as f64) as u32),
            }
        }
        EditTask::Pitch => EditParams::Pitch {
            semitones: rng.random_range(-PITCH_RANGE_SEMITONES..=PITCH_RANGE_SEMITONES),
        },
        EditTask::Speed => {
            let lo = SPEED_MIN.max(secs / MAX_OUTPUT_SECONDS);
            if lo > SPEED_MAX {
                return Err(ConstraintError::single(Some(task), "len(result) <= 47s", format!("{secs:.3} s")));
            }
            EditParams::Speed {
                factor: log_uniform(rng, lo, SPEED_MAX),
            }
        }
        EditTask::Inpaint => EditParams::Inpaint {
            percent: sample_inpaint_percent(rng),
        },
        EditTask::Replace => EditParams::Replace,
        EditTask::Drop => EditParams::Drop,
        EditTask::Swap => EditParams::Swap,
        EditTask::LowPass => EditParams::LowPass,
        EditTask::HighPass => EditParams::HighPass,
        EditTask::SuperRes => EditParams::SuperRes,
        EditTask::Denoise => EditParams::Denoise,
    })
}
