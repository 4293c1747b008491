use proptest::prelude::*;
use rhythm_core::beat::{detect_beats, extract_beats, sonority_envelope, BeatConfig, Envelope};
use rhythm_core::stimuli::{gen_syllable_wav, SyllableParams};
use rhythm_core::AudioBuffer;

const FS: f64 = 8000.0;

fn syllables(onsets: Vec<f64>, seed: u64) -> AudioBuffer {
    let duration_s = onsets.last().copied().unwrap_or(0.0) + 0.4;
    gen_syllable_wav(&SyllableParams { onsets, duration_s, seed, ..SyllableParams::default() }).unwrap()
}

fn arb_onsets() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.2f64..0.45, 1..5).prop_map(|gaps| {
        let mut t = 0.05;
        gaps.into_iter()
            .map(|g| {
                t += g;
                (t * 1000.0).round() / 1000.0
            })
            .collect()
    })
}

#[test]
fn syllable_train_gives_one_beat_per_burst() {
    let audio = syllables(vec![0.2, 0.5, 0.8, 1.1, 1.4], 0);
    let beats = extract_beats(&audio, &BeatConfig::default()).unwrap();
    assert_eq!(beats.len(), 5);
    for w in beats.times().windows(2) {
        assert!((w[1] - w[0] - 0.3).abs() <= 0.03, "interval {}", w[1] - w[0]);
    }
}

#[test]
fn silence_has_no_beats_and_loud_copy_matches() {
    let audio = AudioBuffer::silence(1.0, 8000).unwrap();
    assert!(extract_beats(&audio, &BeatConfig::default()).unwrap().is_empty());

    let audio = syllables(vec![0.2, 0.5, 0.8, 1.1, 1.4], 3);
    let a = extract_beats(&audio, &BeatConfig::default()).unwrap();
    let b = extract_beats(&audio.scaled(2.0), &BeatConfig::default()).unwrap();
    assert_eq!(a.len(), b.len());
    for (x, y) in a.beats.iter().zip(&b.beats) {
        assert!((x.time - y.time).abs() <= 1.0 / FS);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gain_leaves_beats_unchanged(onsets in arb_onsets(), seed in 0u64..100, gain in 0.05f64..4.0) {
        let audio = syllables(onsets, seed);
        let cfg = BeatConfig::default();
        let a = extract_beats(&audio, &cfg).unwrap();
        let b = extract_beats(&audio.scaled(gain), &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.beats.iter().zip(&b.beats) {
            prop_assert!((x.time - y.time).abs() <= 1.0 / FS);
            prop_assert!((x.magnitude - y.magnitude).abs() < 1e-9);
        }
    }

    #[test]
    fn leading_silence_shifts_beats(onsets in arb_onsets(), seed in 0u64..100, shift_ms in 0u32..500) {
        let audio = syllables(onsets, seed);
        let shift = shift_ms as f64 / 1000.0;
        let cfg = BeatConfig::default();
        let a = extract_beats(&audio, &cfg).unwrap();
        let b = extract_beats(&audio.delayed(shift), &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.beats.iter().zip(&b.beats) {
            prop_assert!((x.time + shift - y.time).abs() <= 1.0 / FS + 1e-12);
            prop_assert!((x.magnitude - y.magnitude).abs() < 1e-9);
        }
    }

    #[test]
    fn envelope_is_nonnegative_and_same_length(onsets in arb_onsets(), seed in 0u64..100) {
        let audio = syllables(onsets, seed);
        let env = sonority_envelope(&audio, 6, 300.0, 2000.0, 20.0, 40.0).unwrap();
        prop_assert_eq!(env.values.len(), audio.len());
        prop_assert!(env.values.iter().all(|v| *v >= 0.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn magnitudes_normalised(values in prop::collection::vec(0.0f64..1.0, 2..200)) {
        let env = Envelope { values, sample_rate: 100 };
        let beats = detect_beats(&env, 0.1).unwrap();
        if !beats.is_empty() {
            prop_assert!(beats.beats.iter().all(|b| b.magnitude > 0.0 && b.magnitude <= 1.0));
            prop_assert!(beats.beats.iter().any(|b| b.magnitude == 1.0));
        }
        prop_assert!(beats.times().windows(2).all(|w| w[1] > w[0]));
        prop_assert!(beats.times().iter().all(|t| *t >= 0.0 && *t <= beats.source_duration));
    }

    #[test]
    fn lowering_threshold_only_adds_beats(
        values in prop::collection::vec(0.0f64..1.0, 2..200),
        lo in 0.01f64..0.5,
        extra in 0.0f64..0.49,
    ) {
        let env = Envelope { values, sample_rate: 100 };
        let loose = detect_beats(&env, lo).unwrap();
        let strict = detect_beats(&env, lo + extra).unwrap();
        for b in &strict.beats {
            prop_assert!(loose.beats.contains(b));
        }
    }
}
