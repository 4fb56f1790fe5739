use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use editforge_bench::texture;
use editforge_core::dsp::{pitch_shift, stft_magnitudes, time_stretch, ButterworthCascade, FilterKind};
use editforge_core::metrics::{lsd, mr_stft_loss, ms_mel_loss, si_sdr, StftConfig};
use editforge_core::audio::resample;

fn transforms(c: &mut Criterion) {
    let clip = texture(10.0, 220.0);
    let mono = clip.mono_mixdown();
    let mut g = c.benchmark_group("transform_10s");
    g.sample_size(10);
    g.bench_function("stft_1024", |b| b.iter(|| stft_magnitudes(&mono, 1024, 256, clip.sample_rate())));
    g.bench_function("butterworth_8", |b| {
        b.iter(|| ButterworthCascade::new(FilterKind::LowPass, 8, 44_100.0, 8000.0).run(&mono))
    });
    g.bench_function("resample_16k", |b| b.iter(|| resample(&clip, 16_000)));
    for semis in [-7.0, 5.0] {
        g.bench_with_input(BenchmarkId::new("pitch_shift", semis), &semis, |b, &s| b.iter(|| pitch_shift(&mono, s)));
    }
    g.bench_function("time_stretch_1.5", |b| b.iter(|| time_stretch(&mono, 1.5)));
    g.finish();
}

fn metrics(c: &mut Criterion) {
    let reference = texture(10.0, 220.0);
    let estimate = texture(10.0, 233.0);
    let cfg = StftConfig::default();
    let mut g = c.benchmark_group("metric_10s");
    g.sample_size(10);
    g.bench_function("lsd", |b| b.iter(|| lsd(&reference, &estimate, &cfg).unwrap()));
    g.bench_function("mr_stft", |b| b.iter(|| mr_stft_loss(&reference, &estimate, &cfg).unwrap()));
    g.bench_function("ms_mel", |b| b.iter(|| ms_mel_loss(&reference, &estimate, &cfg).unwrap()));
    g.bench_function("si_sdr", |b| b.iter(|| si_sdr(&reference, &estimate).unwrap()));
    g.finish();
}

criterion_group!(benches, transforms, metrics);
criterion_main!(benches);
