//! Two-level meter induction with a bank of independent adaptive oscillators.
//!
//! Beat candidates hear every pulse; measure candidates hear only strong
//! pulses. The best-synchronised oscillator of each level wins, and the pair is
//! accepted as a meter only if the measure period is close to an integer
//! multiple (at least 2) of the beat period and every recent measure reset
//! lines up with a beat reset.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::oscillator::{simulate, synchrony_output, AdaptiveOscillator, EntrainmentTrace, OscillatorParams};
use crate::pulse::PulseTrain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Beat,
    Measure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankEntry {
    pub level: Level,
    pub oscillator: AdaptiveOscillator,
}

/// Oscillators ordered by resting period (beat candidates first on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorBank {
    entries: Vec<BankEntry>,
}

impl OscillatorBank {
    pub fn entries(&self) -> &[BankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn resting_periods(&self, level: Level) -> Vec<f64> {
        self.entries
            .iter()
            .filter(|e| e.level == level)
            .map(|e| e.oscillator.params().resting_period)
            .collect()
    }
}

fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 || lo == hi {
        return vec![(lo * hi).sqrt()];
    }
    let ratio = (hi / lo).powf(1.0 / (count - 1) as f64);
    (0..count)
        .map(|i| match i {
            0 => lo,
            _ if i == count - 1 => hi,
            _ => lo * ratio.powi(i as i32),
        })
        .collect()
}

/// Geometrically spaced resting periods across each range. Every oscillator
/// shares `params` except its resting period, and may adapt within a factor
/// `bound_ratio` either side of it.
pub fn build_bank(
    beat_range: (f64, f64),
    measure_range: (f64, f64),
    count_per_level: usize,
    params: &OscillatorParams,
    bound_ratio: f64,
) -> Result<OscillatorBank> {
    if count_per_level == 0 {
        return domain("count_per_level must be >= 1");
    }
    if !(bound_ratio > 1.0) {
        return domain("bound_ratio must exceed 1");
    }
    let mut entries = Vec::new();
    for (level, (lo, hi)) in [(Level::Beat, beat_range), (Level::Measure, measure_range)] {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return domain(format!("{level:?} range must satisfy 0 < lo <= hi, got [{lo}, {hi}]"));
        }
        for rest in geometric(lo, hi, count_per_level) {
            let p = OscillatorParams {
                resting_period: rest,
                period_min: rest / bound_ratio,
                period_max: rest * bound_ratio,
                ..*params
            };
            entries.push(BankEntry { level, oscillator: AdaptiveOscillator::new(p)? });
        }
    }
    entries.sort_by(|a, b| {
        let pa = a.oscillator.params().resting_period;
        let pb = b.oscillator.params().resting_period;
        pa.total_cmp(&pb).then((a.level == Level::Measure).cmp(&(b.level == Level::Measure)))
    });
    Ok(OscillatorBank { entries })
}

/// Drives every oscillator of the bank independently from t = 0 to `t_end`.
/// Measure candidates only receive pulses with amplitude >= `strong_threshold`.
pub fn run_network(
    bank: &OscillatorBank,
    train: &PulseTrain,
    dt: f64,
    t_end: f64,
    strong_threshold: f64,
) -> Result<Vec<EntrainmentTrace>> {
    let strong = train.gated(strong_threshold);
    bank.entries
        .iter()
        .map(|e| {
            let mut osc = e.oscillator;
            let input = match e.level {
                Level::Beat => train,
                Level::Measure => &strong,
            };
            simulate(&mut osc, input, dt, 0.0, t_end)
        })
        .collect()
}

/// Nearest integer ratio of two periods (ties round up, minimum 1) and the
/// distance of the true ratio from it.
pub fn harmonicity(p_hi: f64, p_lo: f64) -> Result<(u32, f64)> {
    if !(p_lo > 0.0 && p_hi > 0.0) {
        return domain("periods must be positive");
    }
    if p_hi < p_lo {
        return domain(format!("p_hi {p_hi} is shorter than p_lo {p_lo}"));
    }
    let r = p_hi / p_lo;
    let n = (r + 0.5).floor().max(1.0);
    Ok((n as u32, (r - n).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterTolerances {
    /// Resets over which synchrony is scored (and that must align).
    pub window: usize,
    pub ratio_tolerance: f64,
    /// Alignment window as a fraction of the beat period.
    pub align_fraction: f64,
    /// Minimum synchrony for a level to count as entrained.
    pub min_score: f64,
    /// Candidates within this much of the best score are treated as tied.
    pub score_tie: f64,
}

impl Default for MeterTolerances {
    fn default() -> Self {
        Self { window: 4, ratio_tolerance: 0.1, align_fraction: 0.15, min_score: 0.8, score_tie: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterScores {
    pub beat: f64,
    pub measure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterEstimate {
    #[serde(rename = "beat_period_s")]
    pub beat_period: f64,
    #[serde(rename = "measure_period_s")]
    pub measure_period: f64,
    pub beats_per_measure: u32,
    #[serde(rename = "downbeat_time_s")]
    pub downbeat_time: f64,
    pub scores: MeterScores,
    pub harmonicity_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeterOutcome {
    Meter(MeterEstimate),
    NoMeter {
        no_meter: String,
        /// Beat period, when the beat level alone was found.
        #[serde(rename = "beat_period_s", skip_serializing_if = "Option::is_none", default)]
        beat_period: Option<f64>,
    },
}

impl MeterOutcome {
    pub fn estimate(&self) -> Option<&MeterEstimate> {
        match self {
            Self::Meter(m) => Some(m),
            Self::NoMeter { .. } => None,
        }
    }

    fn none(reason: impl Into<String>, beat_period: Option<f64>) -> Self {
        Self::NoMeter { no_meter: reason.into(), beat_period }
    }
}

struct Winner<'a> {
    trace: &'a EntrainmentTrace,
    score: f64,
    period: f64,
}

fn pick_winner<'a>(
    traces: &'a [EntrainmentTrace],
    bank: &OscillatorBank,
    level: Level,
    tol: &MeterTolerances,
) -> Result<Option<Winner<'a>>> {
    let mut scored = Vec::new();
    for (trace, entry) in traces.iter().zip(&bank.entries) {
        if entry.level != level || trace.resets.len() < tol.window {
            continue;
        }
        let score = synchrony_output(trace, tol.window)?;
        let rest = entry.oscillator.params().resting_period;
        let period = trace.final_period().unwrap_or(rest);
        scored.push((trace, score, period, (period / rest).ln().abs()));
    }
    let Some(best) = scored.iter().map(|s| s.1).reduce(f64::max) else {
        return Ok(None);
    };
    Ok(scored
        .into_iter()
        .filter(|s| s.1 >= best - tol.score_tie)
        .min_by(|a, b| b.0.resets.len().cmp(&a.0.resets.len()).then(a.3.total_cmp(&b.3)))
        .map(|(trace, score, period, _)| Winner { trace, score, period }))
}

/// Picks a winner per level and checks the inter-level constraints.
pub fn estimate_meter(
    traces: &[EntrainmentTrace],
    bank: &OscillatorBank,
    tol: &MeterTolerances,
) -> Result<MeterOutcome> {
    if traces.len() != bank.len() {
        return domain(format!("{} traces for a bank of {}", traces.len(), bank.len()));
    }
    if tol.window == 0 {
        return domain("window must be >= 1");
    }
    let Some(beat) = pick_winner(traces, bank, Level::Beat, tol)? else {
        return Ok(MeterOutcome::none("no beat-level oscillator entrained", None));
    };
    if beat.score < tol.min_score {
        return Ok(MeterOutcome::none(format!("beat synchrony {:.3} below threshold", beat.score), None));
    }
    let found_beat = Some(beat.period);
    let Some(measure) = pick_winner(traces, bank, Level::Measure, tol)? else {
        return Ok(MeterOutcome::none("too few strong pulses for a measure level", found_beat));
    };
    if measure.score < tol.min_score {
        return Ok(MeterOutcome::none(
            format!("measure synchrony {:.3} below threshold", measure.score),
            found_beat,
        ));
    }
    if measure.period < beat.period {
        return Ok(MeterOutcome::none("measure period shorter than beat period", found_beat));
    }
    let (n, error) = harmonicity(measure.period, beat.period)?;
    if n < 2 {
        return Ok(MeterOutcome::none("measure period does not span several beats", found_beat));
    }
    if error > tol.ratio_tolerance {
        return Ok(MeterOutcome::none(
            format!("period ratio off an integer by {error:.3}"),
            found_beat,
        ));
    }
    let window = tol.align_fraction * beat.period;
    let beat_resets = beat.trace.reset_times();
    let recent = &measure.trace.resets[measure.trace.resets.len() - tol.window..];
    let aligned = |t: f64| beat_resets.iter().any(|b| (b - t).abs() <= window);
    if let Some(r) = recent.iter().find(|r| !aligned(r.t)) {
        return Ok(MeterOutcome::none(
            format!("measure reset at {:.3} s has no matching beat", r.t),
            found_beat,
        ));
    }
    Ok(MeterOutcome::Meter(MeterEstimate {
        beat_period: beat.period,
        measure_period: measure.period,
        beats_per_measure: n,
        downbeat_time: recent[0].t,
        scores: MeterScores { beat: beat.score, measure: measure.score },
        harmonicity_error: error,
    }))
}

/// Bank layout and thresholds for [`detect_meter`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterConfig {
    pub beat_range: (f64, f64),
    pub measure_range: (f64, f64),
    pub count_per_level: usize,
    pub bound_ratio: f64,
    pub strong_threshold: f64,
    pub oscillator: OscillatorParams,
    pub tolerances: MeterTolerances,
}

impl Default for MeterConfig {
    fn default() -> Self {
        Self {
            beat_range: (0.2, 0.8),
            measure_range: (0.6, 2.4),
            count_per_level: 3,
            bound_ratio: 2.0,
            strong_threshold: 0.8,
            oscillator: OscillatorParams::default(),
            tolerances: MeterTolerances::default(),
        }
    }
}

impl MeterConfig {
    /// Integration step: half the coarsest step any bank member allows.
    pub fn dt(&self) -> f64 {
        let shortest = self.beat_range.0.min(self.measure_range.0);
        shortest / self.bound_ratio / 20.0
    }
}

/// Builds the bank, runs it over the whole train and estimates the meter.
pub fn detect_meter(train: &PulseTrain, config: &MeterConfig) -> Result<MeterOutcome> {
    if !(config.strong_threshold > 0.0 && config.strong_threshold <= 1.0) {
        return domain("strong_threshold must lie in (0, 1]");
    }
    let bank = build_bank(
        config.beat_range,
        config.measure_range,
        config.count_per_level,
        &config.oscillator,
        config.bound_ratio,
    )?;
    let t_end = train.last_time().unwrap_or(0.0);
    let traces = run_network(&bank, train, config.dt(), t_end, config.strong_threshold)?;
    estimate_meter(&traces, &bank, &config.tolerances)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimuli::{gen_hierarchical, gen_periodic};

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn bank_spacing() {
        let p = OscillatorParams::default();
        let bank = build_bank((0.2, 0.8), (0.6, 2.4), 3, &p, 2.0).unwrap();
        assert!(close(&bank.resting_periods(Level::Beat), &[0.2, 0.4, 0.8]));
        assert!(close(&bank.resting_periods(Level::Measure), &[0.6, 1.2, 2.4]));
        let all: Vec<f64> = bank.entries().iter().map(|e| e.oscillator.params().resting_period).collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(build_bank((0.2, 0.8), (0.6, 2.4), 1, &p, 2.0).unwrap().len(), 2);
        assert!(build_bank((0.2, 0.8), (0.6, 2.4), 0, &p, 2.0).is_err());
        assert!(build_bank((0.0, 0.8), (0.6, 2.4), 2, &p, 2.0).is_err());
    }

    #[test]
    fn harmonicity_examples() {
        assert_eq!(harmonicity(1.2, 0.4).unwrap().0, 3);
        assert!(harmonicity(1.2, 0.4).unwrap().1 < 1e-12);
        assert_eq!(harmonicity(1.0, 0.4).unwrap(), (3, 0.5));
        assert_eq!(harmonicity(0.5, 0.5).unwrap(), (1, 0.0));
        assert!(harmonicity(0.0, 0.5).is_err());
    }

    #[test]
    fn measure_candidates_see_only_strong_pulses() {
        let train = PulseTrain::from_pairs((0..12).map(|i| (i as f64 * 0.4, if i % 2 == 0 { 1.0 } else { 0.5 }))).unwrap();
        let bank = build_bank((0.2, 0.8), (0.6, 2.4), 3, &OscillatorParams::default(), 2.0).unwrap();
        let traces = run_network(&bank, &train, 0.005, 4.4, 0.8).unwrap();
        for (t, e) in traces.iter().zip(bank.entries()) {
            let expect = if e.level == Level::Measure { 6 } else { 12 };
            assert_eq!(t.pulses_received, expect);
        }
    }

    #[test]
    fn empty_train_free_runs_and_has_no_meter() {
        let bank = build_bank((0.2, 0.8), (0.6, 2.4), 2, &OscillatorParams::default(), 2.0).unwrap();
        let traces = run_network(&bank, &PulseTrain::empty(), 0.005, 2.0, 0.8).unwrap();
        assert!(traces.iter().all(|t| t.resets.is_empty()));
        let out = detect_meter(&PulseTrain::empty(), &MeterConfig::default()).unwrap();
        assert!(out.estimate().is_none());
    }

    #[test]
    fn measure_candidate_entrains_to_strong_pulses() {
        let train = gen_hierarchical(0.4, 3, 1.0, 0.5, 12).unwrap();
        let bank = build_bank((0.2, 0.8), (0.6, 2.4), 3, &OscillatorParams::default(), 2.0).unwrap();
        let traces = run_network(&bank, &train, 0.005, train.last_time().unwrap(), 0.8).unwrap();
        let (trace, _) = traces
            .iter()
            .zip(bank.entries())
            .find(|(_, e)| e.level == Level::Measure && (e.oscillator.params().resting_period - 1.2).abs() < 1e-9)
            .unwrap();
        assert!((trace.final_period().unwrap() - 1.2).abs() < 0.05 * 1.2);
    }

    #[test]
    fn recovers_triple_meter() {
        let train = gen_hierarchical(0.4, 3, 1.0, 0.5, 12).unwrap();
        let out = detect_meter(&train, &MeterConfig::default()).unwrap();
        let m = out.estimate().expect("meter");
        assert_eq!(m.beats_per_measure, 3);
        assert!((m.beat_period - 0.4).abs() < 0.02);
        assert!((m.measure_period - 1.2).abs() < 0.06);
        // downbeats fall on strong pulses: multiples of 1.2 s
        let k = m.downbeat_time / 1.2;
        assert!((k - k.round()).abs() < 0.05);
    }

    #[test]
    fn uniform_train_finds_beat_but_no_meter() {
        let train = gen_periodic(0.4, 36, 1.0, 0.0).unwrap();
        match detect_meter(&train, &MeterConfig::default()).unwrap() {
            MeterOutcome::NoMeter { beat_period: Some(p), .. } => assert!((p - 0.4).abs() < 0.02),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn outcome_json_shapes() {
        let none = MeterOutcome::none("x", None);
        assert_eq!(serde_json::to_string(&none).unwrap(), r#"{"no_meter":"x"}"#);
        let train = gen_hierarchical(0.4, 3, 1.0, 0.5, 12).unwrap();
        let json = serde_json::to_value(detect_meter(&train, &MeterConfig::default()).unwrap()).unwrap();
        for key in ["beat_period_s", "measure_period_s", "beats_per_measure", "downbeat_time_s", "scores", "harmonicity_error"] {
            assert!(json.get(key).is_some(), "missing {key}");
        }
    }
}
