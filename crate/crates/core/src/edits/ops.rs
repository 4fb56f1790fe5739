use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::constraints::{validate_constraints, ValidatedRequest};
use super::{
    EditPair, EditParams, EditTask, Position, DENOISE_VARIANCE, FILTER_ORDER, HIGH_PASS_CUTOFF_HZ,
    LOW_PASS_CUTOFF_HZ, SUPER_RES_DIVISOR,
};
use crate::audio::{concat, mix_at, resample, resample_samples, AudioClip};
use crate::dsp::{pitch_shift, time_stretch, ButterworthCascade, FilterKind};
use crate::error::Result;

fn pair(input: AudioClip, output: AudioClip, params: EditParams, offset: Option<usize>) -> EditPair {
    EditPair {
        input_audio: input,
        output_audio: output,
        task: params.task(),
        params,
        offset_samples: offset,
        source_captions: Vec::new(),
    }
}

fn check_all_compatible(inputs: &[&AudioClip]) -> Result<()> {
    inputs.windows(2).try_for_each(|w| w[0].check_compatible(w[1]))
}

/// Executes a validated request. Tasks with a random component draw from `rng`.
pub fn apply<R: Rng + ?Sized>(request: ValidatedRequest<'_>, rng: &mut R) -> Result<EditPair> {
    let ValidatedRequest { task, inputs, params } = request;
    check_all_compatible(&inputs)?;
    let x = inputs[0];
    Ok(match (task, params) {
        (EditTask::Add, EditParams::Add { position }) => {
            let start = position
                .resolve(x.len(), inputs[1].len(), x.sample_rate())
                .expect("position validated");
            let out = mix_at(x, inputs[1], start)?;
            pair(x.clone(), out, EditParams::Add { position }, Some(start))
        }
        (EditTask::Replace, params) => {
            let (target, replacement) = (inputs[1], inputs[2]);
            let room = x.len() - target.len().max(replacement.len());
            let t0 = rng.random_range(0..=room);
            let input = mix_at(x, target, t0)?;
            let output = mix_at(x, replacement, t0)?;
            pair(input, output, params, Some(t0))
        }
        (EditTask::Drop, params) => {
            let t0 = rng.random_range(0..=x.len() - inputs[1].len());
            pair(mix_at(x, inputs[1], t0)?, x.clone(), params, Some(t0))
        }
        (EditTask::Swap, params) => {
            let (a, b) = (x, inputs[1]);
            pair(concat(a, b)?, concat(b, a)?, params, None)
        }
        (EditTask::Loop, EditParams::Loop { count }) => {
            pair(x.clone(), x.repeated(count as usize), EditParams::Loop { count }, None)
        }
        (EditTask::Pitch, EditParams::Pitch { semitones }) => {
            let out = x.map_channels(|c| pitch_shift(c, semitones));
            pair(x.clone(), out, EditParams::Pitch { semitones }, None)
        }
        (EditTask::Speed, EditParams::Speed { factor }) => {
            let out = x.map_channels(|c| time_stretch(c, 1.0 / factor));
            pair(x.clone(), out, EditParams::Speed { factor }, None)
        }
        (EditTask::LowPass, params) => {
            pair(x.clone(), filtered(x, FilterKind::LowPass, LOW_PASS_CUTOFF_HZ), params, None)
        }
        (EditTask::HighPass, params) => {
            pair(x.clone(), filtered(x, FilterKind::HighPass, HIGH_PASS_CUTOFF_HZ), params, None)
        }
        (EditTask::Inpaint, EditParams::Inpaint { percent }) => {
            let blank = (percent / 100.0 * x.len() as f64).round() as usize;
            let start = rng.random_range(0..=x.len() - blank);
            let input = x.map_channels(|c| {
                let mut c = c.to_vec();
                c[start..start + blank].fill(0.0);
                c
            });
            pair(input, x.clone(), EditParams::Inpaint { percent }, Some(start))
        }
        (EditTask::SuperRes, params) => pair(degrade_rate(x), x.clone(), params, None),
        (EditTask::Denoise, params) => {
            let noise = Normal::new(0.0, DENOISE_VARIANCE.sqrt()).expect("finite std");
            let input = x.map_channels(|c| {
                c.iter()
                    .map(|&s| s + noise.sample(&mut *rng) as f32)
                    .collect()
            });
            pair(input, x.clone(), params, None)
        }
        (task, params) => unreachable!("validated request pairs {task} with {params:?}"),
    })
}

fn filtered(clip: &AudioClip, kind: FilterKind, cutoff: f64) -> AudioClip {
    let mut filter = ButterworthCascade::new(kind, FILTER_ORDER, clip.sample_rate() as f64, cutoff);
    clip.map_channels(|c| filter.run(c))
}

/// Down- then up-samples through a quarter of the clip's rate, keeping its length.
fn degrade_rate(clip: &AudioClip) -> AudioClip {
    let rate = clip.sample_rate();
    let low_rate = (rate as f64 / SUPER_RES_DIVISOR as f64).round().max(1.0) as u32;
    let low = resample(clip, low_rate);
    let ratio = rate as f64 / low_rate as f64;
    low.map_channels(|c| resample_samples(c, ratio, clip.len()))
        .with_rate(rate)
}

fn run<R: Rng + ?Sized>(
    task: EditTask,
    inputs: &[&AudioClip],
    params: EditParams,
    rng: &mut R,
) -> Result<EditPair> {
    let request = validate_constraints(task, inputs, &params, &[])?;
    apply(request, rng)
}

/// Never consulted by the deterministic tasks.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("deterministic edit drew a random number")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("deterministic edit drew a random number")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("deterministic edit drew a random number")
    }
}

pub fn edit_add(base: &AudioClip, target: &AudioClip, position: Position) -> Result<EditPair> {
    run(EditTask::Add, &[base, target], EditParams::Add { position }, &mut NoRng)
}

/// Mixes `target` (input) and `replacement` (output) into `base` at one shared offset.
pub fn edit_replace<R: Rng + ?Sized>(
    base: &AudioClip,
    target: &AudioClip,
    replacement: &AudioClip,
    rng: &mut R,
) -> Result<EditPair> {
    run(EditTask::Replace, &[base, target, replacement], EditParams::Replace, rng)
}

pub fn edit_drop<R: Rng + ?Sized>(base: &AudioClip, target: &AudioClip, rng: &mut R) -> Result<EditPair> {
    run(EditTask::Drop, &[base, target], EditParams::Drop, rng)
}

pub fn edit_swap(first: &AudioClip, second: &AudioClip) -> Result<EditPair> {
    run(EditTask::Swap, &[first, second], EditParams::Swap, &mut NoRng)
}

pub fn edit_loop(clip: &AudioClip, count: u32) -> Result<EditPair> {
    run(EditTask::Loop, &[clip], EditParams::Loop { count }, &mut NoRng)
}

pub fn edit_pitch(clip: &AudioClip, semitones: f64) -> Result<EditPair> {
    run(EditTask::Pitch, &[clip], EditParams::Pitch { semitones }, &mut NoRng)
}

/// Plays `clip` `factor` times faster; the output lasts `len / factor`.
pub fn edit_speed(clip: &AudioClip, factor: f64) -> Result<EditPair> {
    run(EditTask::Speed, &[clip], EditParams::Speed { factor }, &mut NoRng)
}

pub fn edit_low_pass(clip: &AudioClip) -> Result<EditPair> {
    run(EditTask::LowPass, &[clip], EditParams::LowPass, &mut NoRng)
}

pub fn edit_high_pass(clip: &AudioClip) -> Result<EditPair> {
    run(EditTask::HighPass, &[clip], EditParams::HighPass, &mut NoRng)
}

/// Zeroes one contiguous region covering `percent`% of the input.
pub fn edit_inpaint<R: Rng + ?Sized>(clip: &AudioClip, percent: f64, rng: &mut R) -> Result<EditPair> {
    run(EditTask::Inpaint, &[clip], EditParams::Inpaint { percent }, rng)
}

pub fn edit_super_res(clip: &AudioClip) -> Result<EditPair> {
    run(EditTask::SuperRes, &[clip], EditParams::SuperRes, &mut NoRng)
}

pub fn edit_denoise<R: Rng + ?Sized>(clip: &AudioClip, rng: &mut R) -> Result<EditPair> {
    run(EditTask::Denoise, &[clip], EditParams::Denoise, rng)
}
