use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::oscillator::{simulate, AdaptiveOscillator, OscillatorParams};
use crate::pulse::PulseTrain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TempoJudgement {
    Faster,
    Slower,
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempoConfig {
    pub oscillator: OscillatorParams,
    /// Relative period difference needed to call a change.
    pub jnd: f64,
    /// Silence between the last pulse of the first series and the first of the second.
    pub pause: f64,
    /// Judge each series with a fresh oscillator instead of carrying one across.
    pub reset_per_series: bool,
}

impl Default for TempoConfig {
    fn default() -> Self {
        Self {
            oscillator: OscillatorParams::default(),
            jnd: 0.02,
            pause: 1.0,
            reset_per_series: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempoOutcome {
    pub judgement: TempoJudgement,
    pub period_a: f64,
    pub period_b: f64,
}

/// Runs `train` from its first pulse to its last on `osc`.
fn run_series(osc: &mut AdaptiveOscillator, train: &PulseTrain, dt: f64) -> Result<()> {
    let times = train.times();
    simulate(osc, train, dt, times[0], times[times.len() - 1])?;
    Ok(())
}

/// Says whether the second series sounds faster than the first, judged from
/// the period an entraining oscillator holds at the end of each series.
pub fn simulate_tempo_discrimination(
    series_a: &PulseTrain,
    series_b: &PulseTrain,
    config: &TempoConfig,
) -> Result<TempoOutcome> {
    if series_a.len() < 2 || series_b.len() < 2 {
        return domain("each series needs at least 2 pulses");
    }
    if !(config.jnd >= 0.0) {
        return domain("jnd must be >= 0");
    }
    if !(config.pause >= 0.0) {
        return domain("pause must be >= 0");
    }
    let dt = config.oscillator.max_dt() / 2.0;

    let mut osc = AdaptiveOscillator::new(config.oscillator)?;
    run_series(&mut osc, series_a, dt)?;
    let period_a = osc.period();

    if config.reset_per_series {
        osc = AdaptiveOscillator::new(config.oscillator)?;
        run_series(&mut osc, series_b, dt)?;
    } else {
        // carry the adapted oscillator through the pause; the gap is not an
        // observed interval
        let a_end = series_a.last_time().expect("non-empty");
        let b = series_b.shifted(a_end + config.pause - series_b.pulses()[0].time)?;
        osc.clear_reset_history();
        let b_end = b.last_time().expect("non-empty");
        simulate(&mut osc, &b, dt, a_end, b_end).map_err(|e| match e {
            Error::Domain(msg) => Error::Domain(format!("second series: {msg}")),
            other => other,
        })?;
    }
    let period_b = osc.period();

    let judgement = if period_a > period_b * (1.0 + config.jnd) {
        TempoJudgement::Faster
    } else if period_b > period_a * (1.0 + config.jnd) {
        TempoJudgement::Slower
    } else {
        TempoJudgement::Equal
    };
    Ok(TempoOutcome { judgement, period_a, period_b })
}
