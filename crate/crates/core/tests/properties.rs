use proptest::prelude::*;

use editforge_core::audio::{read_wav, resample, write_wav, AudioClip, WavEncoding};
use editforge_core::bayesopt::{P2PSpace, SearchSpace, ZetaSpace};
use editforge_core::edits::Position;
use editforge_core::elo::{elo_update, Verdict};

fn verdict() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::A), Just(Verdict::B), Just(Verdict::Tie)]
}

proptest! {
    #[test]
    fn elo_updates_are_zero_sum_and_mirror(a in 0.0..3000.0f64, b in 0.0..3000.0f64, v in verdict()) {
        let (na, nb) = elo_update(a, b, v, 32.0);
        prop_assert!((na + nb - a - b).abs() < 1e-9);
        let flipped = match v { Verdict::A => Verdict::B, Verdict::B => Verdict::A, Verdict::Tie => Verdict::Tie };
        let (mb, ma) = elo_update(b, a, flipped, 32.0);
        prop_assert!((ma - na).abs() < 1e-9 && (mb - nb).abs() < 1e-9);
        prop_assert!((na - a).abs() <= 32.0);
    }

    #[test]
    fn unit_cube_points_map_inside_the_boxes(u in proptest::collection::vec(0.0..=1.0f64, 3)) {
        let p = P2PSpace::default().from_unit(&u);
        prop_assert!((0.3..=0.9).contains(&p.frac) && (0.0..=0.6).contains(&p.delay) && (1.0..=1.8).contains(&p.weight));
        let z = ZetaSpace::default().from_unit(&u);
        prop_assert!((18..=65).contains(&z.t_start));
        prop_assert_eq!(ZetaSpace::default().from_unit(&ZetaSpace::default().to_unit(&z)), z);
    }

    #[test]
    fn resolved_positions_fit_the_base(base in 1usize..10_000, target in 1usize..10_000, t in -2.0..12.0f64) {
        for pos in [Position::Start, Position::Middle, Position::End, Position::At(t)] {
            match pos.resolve(base, target, 1_000) {
                Some(start) => prop_assert!(start + target <= base),
                None => prop_assert!(target > base || matches!(pos, Position::At(_))),
            }
        }
    }

    #[test]
    fn wav_round_trips_within_quantisation(samples in proptest::collection::vec(-1.0..1.0f32, 1..2_000)) {
        let clip = AudioClip::mono(samples, 16_000).unwrap();
        for (encoding, step) in [(WavEncoding::Pcm16, 1.0 / 32_768.0), (WavEncoding::Pcm24, 1.0 / 8_388_608.0), (WavEncoding::Float32, 0.0)] {
            let back = read_wav(&write_wav(&clip, encoding).unwrap()).unwrap();
            prop_assert_eq!(back.len(), clip.len());
            let err = back.channel(0).iter().zip(clip.channel(0)).map(|(a, b)| (a - b).abs()).fold(0.0f32, f32::max);
            prop_assert!(err <= step as f32, "{:?} error {}", encoding, err);
        }
    }

    #[test]
    fn resampling_scales_length(len in 100usize..5_000, rate in prop_oneof![Just(8_000u32), Just(16_000), Just(22_050), Just(48_000)]) {
        let clip = AudioClip::mono(vec![0.1; len], 44_100).unwrap();
        let out = resample(&clip, rate);
        let want = len as f64 * rate as f64 / 44_100.0;
        prop_assert!((out.len() as f64 - want).abs() <= 1.0, "{} vs {}", out.len(), want);
        prop_assert_eq!(out.sample_rate(), rate);
    }
}
