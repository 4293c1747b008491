//! Seedable generators for pulse trains, trial schedules, mora-duration data
//! and synthetic syllable audio.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{domain, Result};
use crate::pulse::{Pulse, PulseTrain};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_amplitude(name: &str, a: f64) -> Result<()> {
    if a > 0.0 && a <= 1.0 {
        Ok(())
    } else {
        domain(format!("{name} must lie in (0, 1], got {a}"))
    }
}

/// `count` pulses at `start_time + i * period`.
pub fn gen_periodic(period: f64, count: usize, amplitude: f64, start_time: f64) -> Result<PulseTrain> {
    if !(period > 0.0) {
        return domain("period must be positive");
    }
    if count == 0 {
        return domain("count must be >= 1");
    }
    check_amplitude("amplitude", amplitude)?;
    PulseTrain::from_pairs((0..count).map(|i| (start_time + i as f64 * period, amplitude)))
}

/// Periodic pulses displaced by independent zero-mean Gaussian offsets.
pub fn gen_jittered(
    period: f64,
    count: usize,
    amplitude: f64,
    jitter_sd: f64,
    start_time: f64,
    seed: u64,
) -> Result<PulseTrain> {
    if !(jitter_sd >= 0.0 && jitter_sd < period / 3.0) {
        return domain(format!("jitter_sd must lie in [0, period/3), got {jitter_sd}"));
    }
    let nominal = gen_periodic(period, count, amplitude, start_time)?;
    if jitter_sd == 0.0 {
        return Ok(nominal);
    }
    let noise = Normal::new(0.0, jitter_sd).expect("finite sd");
    let mut rng = rng(seed);
    let mut times: Vec<f64> = nominal.pulses().iter().map(|p| p.time + noise.sample(&mut rng)).collect();
    times.sort_by(f64::total_cmp);
    if times[0] < 0.0 {
        return domain("jitter pushed a pulse before t = 0; use a later start_time");
    }
    PulseTrain::from_pairs(times.into_iter().map(|t| (t, amplitude)))
}

/// Pulses with exponentially distributed gaps (a Poisson process) starting at
/// `start_time`; each pulse is strong with probability `strong_prob`.
pub fn gen_poisson(
    mean_interval: f64,
    count: usize,
    strong_prob: f64,
    strong_amp: f64,
    weak_amp: f64,
    start_time: f64,
    seed: u64,
) -> Result<PulseTrain> {
    if !(mean_interval > 0.0) {
        return domain("mean_interval must be positive");
    }
    if !(0.0..=1.0).contains(&strong_prob) {
        return domain("strong_prob must lie in [0, 1]");
    }
    check_amplitude("strong_amp", strong_amp)?;
    check_amplitude("weak_amp", weak_amp)?;
    let mut rng = rng(seed);
    let mut t = start_time;
    let mut pairs = Vec::with_capacity(count);
    for i in 0..count {
        if i > 0 {
            // 1 - u lies in (0, 1], so the log is finite
            let u: f64 = rng.random();
            t += -mean_interval * (1.0 - u).ln();
        }
        let amp = if rng.random::<f64>() < strong_prob { strong_amp } else { weak_amp };
        pairs.push((t, amp));
    }
    PulseTrain::from_pairs(pairs)
}

/// Removes the pulses at `indices` (duplicates allowed).
pub fn drop_pulses(train: &PulseTrain, indices: &[usize]) -> Result<PulseTrain> {
    if let Some(bad) = indices.iter().find(|&&i| i >= train.len()) {
        return domain(format!("pulse index {bad} out of range for {} pulses", train.len()));
    }
    let kept: Vec<Pulse> = train
        .pulses()
        .iter()
        .enumerate()
        .filter(|(i, _)| !indices.contains(i))
        .map(|(_, p)| *p)
        .collect();
    PulseTrain::new(kept)
}

/// Pulses every `beat_period`; every `beats_per_measure`-th pulse, starting with
/// the first, is strong.
pub fn gen_hierarchical(
    beat_period: f64,
    beats_per_measure: usize,
    strong_amp: f64,
    weak_amp: f64,
    n_measures: usize,
) -> Result<PulseTrain> {
    gen_hierarchical_rotated(beat_period, beats_per_measure, strong_amp, weak_amp, n_measures, 0)
}

/// As [`gen_hierarchical`] with the downbeats moved `downbeat_offset` beats later:
/// pulse `i` is strong when `i ≡ downbeat_offset (mod beats_per_measure)`.
pub fn gen_hierarchical_rotated(
    beat_period: f64,
    beats_per_measure: usize,
    strong_amp: f64,
    weak_amp: f64,
    n_measures: usize,
    downbeat_offset: usize,
) -> Result<PulseTrain> {
    if !(beat_period > 0.0) {
        return domain("beat_period must be positive");
    }
    if beats_per_measure == 0 {
        return domain("beats_per_measure must be >= 1");
    }
    check_amplitude("strong_amp", strong_amp)?;
    check_amplitude("weak_amp", weak_amp)?;
    if !(strong_amp > weak_amp) {
        return domain("strong_amp must exceed weak_amp");
    }
    let k = beats_per_measure;
    PulseTrain::from_pairs((0..k * n_measures).map(|i| {
        let amp = if i % k == downbeat_offset % k { strong_amp } else { weak_amp };
        (i as f64 * beat_period, amp)
    }))
}

/// Anchor ("take") and target ("cards") beat times for a phrase-repetition trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSchedule {
    pub anchor_times: Vec<f64>,
    pub target_times: Vec<f64>,
    pub phi_target: f64,
    pub cycle: f64,
}

/// Anchors every `cycle` seconds, each followed by a target at phase `phi_target`.
pub fn gen_take_cards(phi_target: f64, cycle: f64, n_reps: usize) -> Result<TrialSchedule> {
    if !(phi_target > 0.0 && phi_target < 1.0) {
        return domain("phi_target must lie in (0, 1)");
    }
    if !(cycle > 0.0) {
        return domain("cycle must be positive");
    }
    if n_reps == 0 {
        return domain("n_reps must be >= 1");
    }
    Ok(TrialSchedule {
        anchor_times: (0..n_reps).map(|i| i as f64 * cycle).collect(),
        target_times: (0..n_reps).map(|i| (i as f64 + phi_target) * cycle).collect(),
        phi_target,
        cycle,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoraDatasetParams {
    /// Mean mora duration D (seconds).
    pub mean_mora: f64,
    /// Words of 1..=max_moras moras are generated.
    pub max_moras: usize,
    /// Words per mora count.
    pub reps: usize,
    /// Fraction of each mora's intrinsic deviation offset by a neighbour, in [0, 1].
    pub compensation: f64,
    /// Standard deviation of intrinsic per-mora deviations (seconds).
    pub mora_sd: f64,
    /// Standard deviation of measurement noise on word totals (seconds).
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for MoraDatasetParams {
    fn default() -> Self {
        Self {
            mean_mora: 0.15,
            max_moras: 7,
            reps: 4,
            compensation: 0.8,
            mora_sd: 0.045,
            noise_sd: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoraPoint {
    pub moras: usize,
    #[serde(rename = "duration_s")]
    pub duration: f64,
}

/// Per-mora durations of one word. Each mora deviates from the mean by an
/// intrinsic amount; a fraction `compensation` of that deviation is taken back
/// from the following mora (the last mora compensates its predecessor, a lone
/// mora compensates itself).
pub fn gen_mora_word(n: usize, params: &MoraDatasetParams, rng: &mut impl Rng) -> Vec<f64> {
    let intrinsic = Normal::new(0.0, params.mora_sd.max(0.0)).expect("finite sd");
    let deviations: Vec<f64> = (0..n).map(|_| intrinsic.sample(rng)).collect();
    let mut durations: Vec<f64> = deviations.iter().map(|d| params.mean_mora + d).collect();
    for (j, d) in deviations.iter().enumerate() {
        let neighbour = match n {
            1 => 0,
            _ if j + 1 < n => j + 1,
            _ => j - 1,
        };
        durations[neighbour] -= params.compensation * d;
    }
    durations
}

/// Word-duration dataset: `reps` words for each mora count 1..=max_moras.
pub fn gen_mora_dataset(params: &MoraDatasetParams) -> Result<Vec<MoraPoint>> {
    if !(params.mean_mora > 0.0) {
        return domain("mean_mora must be positive");
    }
    if !(0.0..=1.0).contains(&params.compensation) {
        return domain("compensation must lie in [0, 1]");
    }
    if params.max_moras == 0 || params.reps == 0 {
        return domain("max_moras and reps must be >= 1");
    }
    if !(params.mora_sd >= 0.0 && params.noise_sd >= 0.0) {
        return domain("standard deviations must be >= 0");
    }
    let mut rng = rng(params.seed);
    let noise = Normal::new(0.0, params.noise_sd).expect("finite sd");
    let mut points = Vec::with_capacity(params.max_moras * params.reps);
    for n in 1..=params.max_moras {
        for _ in 0..params.reps {
            let word: f64 = if params.compensation == 1.0 && params.mora_sd == 0.0 {
                n as f64 * params.mean_mora
            } else {
                gen_mora_word(n, params, &mut rng).iter().sum()
            };
            let measured = if params.noise_sd > 0.0 { word + noise.sample(&mut rng) } else { word };
            points.push(MoraPoint { moras: n, duration: measured });
        }
    }
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyllableParams {
    pub onsets: Vec<f64>,
    pub rise_ms: f64,
    pub dur_ms: f64,
    pub decay_ms: f64,
    pub duration_s: f64,
    pub sample_rate: u32,
    /// Peak amplitude of the noise carrier.
    pub amplitude: f64,
    pub seed: u64,
}

impl Default for SyllableParams {
    fn default() -> Self {
        Self {
            onsets: vec![0.2, 0.5, 0.8, 1.1, 1.4],
            rise_ms: 20.0,
            dur_ms: 100.0,
            decay_ms: 40.0,
            duration_s: 1.8,
            sample_rate: 8000,
            amplitude: 0.8,
            seed: 0,
        }
    }
}

/// Band-limited (300 to 2000 Hz) noise bursts: a linear rise over `rise_ms` at
/// each onset, `dur_ms` sustain, then a linear decay over `decay_ms`.
pub fn gen_syllable_wav(params: &SyllableParams) -> Result<AudioBuffer> {
    let SyllableParams { ref onsets, rise_ms, dur_ms, decay_ms, duration_s, sample_rate, amplitude, seed } =
        *params;
    if !(rise_ms > 0.0 && dur_ms >= 0.0 && decay_ms > 0.0) {
        return domain("rise_ms and decay_ms must be positive, dur_ms non-negative");
    }
    if !(amplitude > 0.0 && amplitude <= 1.0) {
        return domain("amplitude must lie in (0, 1]");
    }
    if sample_rate == 0 || 2000.0 >= sample_rate as f64 / 2.0 {
        return domain("sample rate must exceed 4000 Hz");
    }
    if onsets.iter().any(|t| *t < 0.0) {
        return domain("onsets must be >= 0");
    }
    let burst = (rise_ms + dur_ms + decay_ms) / 1000.0;
    for w in onsets.windows(2) {
        if w[1] <= w[0] {
            return domain("onsets must be strictly increasing");
        }
        if w[0] + burst > w[1] {
            return domain(format!("bursts at {} and {} overlap", w[0], w[1]));
        }
    }
    if let Some(last) = onsets.last() {
        if last + burst > duration_s {
            return domain("last burst extends past the requested duration");
        }
    }

    let fs = sample_rate as f64;
    let n = (duration_s * fs).round() as usize;
    if onsets.is_empty() {
        return AudioBuffer::new(vec![0.0; n], sample_rate);
    }

    // random-phase multisine, 5 Hz spacing across the passband
    let mut rng = rng(seed);
    let components: Vec<(f64, f64)> = (0..=340)
        .map(|i| (300.0 + 5.0 * i as f64, rng.random::<f64>() * TAU))
        .collect();
    let mut carrier: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 / fs;
            components.iter().map(|(f, ph)| (TAU * f * t + ph).sin()).sum()
        })
        .collect();
    let peak = carrier.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut carrier {
        *v *= amplitude / peak;
    }

    let (rise, sustain, decay) = (rise_ms / 1000.0, dur_ms / 1000.0, decay_ms / 1000.0);
    let gain = |t: f64| -> f64 {
        onsets
            .iter()
            .map(|&on| {
                let u = t - on;
                if u < 0.0 {
                    0.0
                } else if u < rise {
                    u / rise
                } else if u < rise + sustain {
                    1.0
                } else if u < rise + sustain + decay {
                    1.0 - (u - rise - sustain) / decay
                } else {
                    0.0
                }
            })
            .sum()
    };
    let samples = carrier
        .iter()
        .enumerate()
        .map(|(k, c)| c * gain(k as f64 / fs))
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

/// `n` phases drawn in equal shares (round-robin) from wrapped normals centred
/// on `means`.
pub fn gen_phase_mixture(means: &[f64], sd: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if means.is_empty() {
        return domain("at least one mixture mean is required");
    }
    if !(sd >= 0.0 && sd.is_finite()) {
        return domain("sd must be finite and >= 0");
    }
    let noise = Normal::new(0.0, sd).expect("finite sd");
    let mut rng = rng(seed);
    Ok((0..n)
        .map(|i| {
            let phi = (means[i % means.len()] + noise.sample(&mut rng)).rem_euclid(1.0);
            if phi >= 1.0 { 0.0 } else { phi }
        })
        .collect())
}
