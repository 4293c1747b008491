//! Adaptive oscillator driven by input pulses.
//!
//! The oscillator carries a phase in [0, 1) that advances at rate 1/period and an
//! activation `(1 + cos 2πφ) / 2` which peaks at phase 0. In phase-reset mode a
//! pulse is added to the activation; if the sum exceeds 1 the phase snaps to 0 and
//! the period moves a fraction `α` toward the interval observed since the previous
//! reset. Each cycle that completes without a reset pulls the period a fraction
//! `γ` back toward the resting period. A continuous-coupling variant nudges phase
//! and period in proportion to the phase deviation at pulse arrival instead.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::pulse::{Pulse, PulseTrain};

/// Relative slack allowed when checking the `dt <= period / 10` step contract.
const STEP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    PhaseReset,
    Continuous,
}

/// Parameters shared by a family of oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Period the oscillator relaxes to without input (seconds).
    pub resting_period: f64,
    /// Fraction of the period error corrected per reset, in [0, 1].
    pub adaptation_rate: f64,
    /// Fraction of the distance to the resting period recovered per reset-free cycle.
    pub decay_rate: f64,
    pub period_min: f64,
    pub period_max: f64,
    pub coupling_mode: CouplingMode,
    /// Phase gain used only in continuous mode.
    pub continuous_gain: f64,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            resting_period: 0.5,
            adaptation_rate: 0.3,
            decay_rate: 0.05,
            period_min: 0.1,
            period_max: 2.0,
            coupling_mode: CouplingMode::PhaseReset,
            continuous_gain: 0.5,
        }
    }
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                domain(format!("{name} must lie in [0, 1], got {v}"))
            }
        };
        unit("adaptation_rate", self.adaptation_rate)?;
        unit("decay_rate", self.decay_rate)?;
        if !(self.period_min > 0.0 && self.period_min <= self.period_max && self.period_max.is_finite()) {
            return domain(format!(
                "period bounds must satisfy 0 < p_min <= p_max, got [{}, {}]",
                self.period_min, self.period_max
            ));
        }
        if !(self.period_min..=self.period_max).contains(&self.resting_period) {
            return domain(format!(
                "resting period {} outside bounds [{}, {}]",
                self.resting_period, self.period_min, self.period_max
            ));
        }
        if !(self.continuous_gain >= 0.0 && self.continuous_gain.is_finite()) {
            return domain("continuous_gain must be >= 0");
        }
        Ok(())
    }

    /// Largest integration step admissible for any period within bounds.
    pub fn max_dt(&self) -> f64 {
        self.period_min / 10.0
    }

    /// Copy with every time-valued field multiplied by `k`.
    pub fn time_scaled(&self, k: f64) -> Self {
        Self {
            resting_period: self.resting_period * k,
            period_min: self.period_min * k,
            period_max: self.period_max * k,
            ..*self
        }
    }

    fn clamp(&self, period: f64) -> f64 {
        period.clamp(self.period_min, self.period_max)
    }
}

/// Raised-cosine activation of a phase in [0, 1).
pub fn activation(phase: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&phase) {
        return domain(format!("phase must lie in [0, 1), got {phase}"));
    }
    Ok(raised_cosine(phase))
}

#[inline]
pub(crate) fn raised_cosine(phase: f64) -> f64 {
    0.5 * (1.0 + (TAU * phase).cos())
}

#[inline]
fn wrap_unit(x: f64) -> f64 {
    let w = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

/// What happened when a pulse reached the oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseResponse {
    pub reset: bool,
    /// Activation at the moment the pulse arrived, before any adjustment.
    pub arrival_activation: f64,
    /// Time since the previous reset (or coupled pulse, in continuous mode).
    pub observed_interval: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveOscillator {
    phase: f64,
    period: f64,
    params: OscillatorParams,
    last_reset_time: Option<f64>,
    // set by a reset, cleared at the next wrap; decay applies only to wraps that find it clear
    reset_in_cycle: bool,
}

impl AdaptiveOscillator {
    /// Oscillator at phase 0 running at its resting period.
    pub fn new(params: OscillatorParams) -> Result<Self> {
        Self::with_state(params, 0.0, params.resting_period)
    }

    pub fn with_state(params: OscillatorParams, phase: f64, period: f64) -> Result<Self> {
        params.validate()?;
        if !(0.0..1.0).contains(&phase) {
            return domain(format!("phase must lie in [0, 1), got {phase}"));
        }
        if !(params.period_min..=params.period_max).contains(&period) {
            return domain(format!(
                "period {period} outside bounds [{}, {}]",
                params.period_min, params.period_max
            ));
        }
        Ok(Self {
            phase,
            period,
            params,
            last_reset_time: None,
            reset_in_cycle: false,
        })
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn last_reset_time(&self) -> Option<f64> {
        self.last_reset_time
    }

    pub fn activation(&self) -> f64 {
        raised_cosine(self.phase)
    }

    /// Forgets the previous reset so the next one adapts nothing.
    pub fn clear_reset_history(&mut self) {
        self.last_reset_time = None;
    }

    /// Advances free-running time by `dt`, which must satisfy `0 < dt <= period / 10`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return domain(format!("dt must be positive, got {dt}"));
        }
        let limit = self.period / 10.0;
        if dt > limit * (1.0 + STEP_SLACK) {
            return Err(Error::StepContract { dt, limit });
        }
        self.advance(dt);
        Ok(())
    }

    fn advance(&mut self, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        self.phase += dt / self.period;
        while self.phase >= 1.0 {
            self.phase -= 1.0;
            self.on_wrap();
        }
    }

    fn on_wrap(&mut self) {
        if !self.reset_in_cycle {
            let p = &self.params;
            self.period = p.clamp(self.period + p.decay_rate * (p.resting_period - self.period));
        }
        self.reset_in_cycle = false;
    }

    /// Phase-reset coupling. The pulse resets the phase when activation plus
    /// amplitude strictly exceeds 1.
    pub fn apply_pulse(&mut self, pulse: &Pulse) -> Result<PulseResponse> {
        if self.params.coupling_mode != CouplingMode::PhaseReset {
            return domain("apply_pulse requires phase-reset coupling");
        }
        let arrival = self.activation();
        if arrival + pulse.amplitude <= 1.0 {
            return Ok(PulseResponse {
                reset: false,
                arrival_activation: arrival,
                observed_interval: None,
            });
        }
        let now = pulse.time;
        let observed = self.last_reset_time.map(|last| now - last);
        if let Some(interval) = observed {
            let p = &self.params;
            self.period = p.clamp(self.period + p.adaptation_rate * (interval - self.period));
        }
        self.phase = 0.0;
        self.last_reset_time = Some(now);
        self.reset_in_cycle = true;
        Ok(PulseResponse {
            reset: true,
            arrival_activation: arrival,
            observed_interval: observed,
        })
    }

    /// Continuous coupling: phase is pulled toward 0 by `η·a·sin(2πφ)/2π` and the
    /// period moves by `α·a·d·period`, `d` being the signed deviation of the phase
    /// from 0 in [-0.5, 0.5). Late pulses (d > 0) lengthen the period.
    pub fn apply_pulse_continuous(&mut self, pulse: &Pulse) -> Result<PulseResponse> {
        if self.params.coupling_mode != CouplingMode::Continuous {
            return domain("apply_pulse_continuous requires continuous coupling");
        }
        let arrival = self.activation();
        let phi = self.phase;
        let deviation = if phi < 0.5 { phi } else { phi - 1.0 };
        let a = pulse.amplitude;
        let p = self.params;
        self.phase = wrap_unit(phi - p.continuous_gain * a * (TAU * phi).sin() / TAU);
        self.period = p.clamp(self.period + p.adaptation_rate * a * deviation * self.period);
        let observed = self.last_reset_time.map(|last| pulse.time - last);
        self.last_reset_time = Some(pulse.time);
        Ok(PulseResponse {
            reset: false,
            arrival_activation: arrival,
            observed_interval: observed,
        })
    }

    fn couple(&mut self, pulse: &Pulse) -> Result<PulseResponse> {
        match self.params.coupling_mode {
            CouplingMode::PhaseReset => self.apply_pulse(pulse),
            CouplingMode::Continuous => self.apply_pulse_continuous(pulse),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub phase: f64,
    pub period: f64,
    pub activation: f64,
}

/// A pulse that reset the oscillator (or, in continuous mode, any coupled pulse).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResetEvent {
    pub t: f64,
    pub interval: Option<f64>,
    /// Activation when the pulse arrived; 1 means it landed on zero phase.
    pub activation: f64,
    /// Period after the adjustment made by this pulse.
    pub period: f64,
}

/// Everything needed to rerun a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    #[serde(flatten)]
    pub oscillator: OscillatorParams,
    pub initial_phase: f64,
    pub initial_period: f64,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrainmentTrace {
    pub params: TraceParams,
    pub samples: Vec<TraceSample>,
    pub resets: Vec<ResetEvent>,
    /// Number of pulses delivered to the oscillator, resetting or not.
    pub pulses_received: usize,
}

impl EntrainmentTrace {
    pub fn final_period(&self) -> Option<f64> {
        self.samples.last().map(|s| s.period)
    }

    pub fn reset_times(&self) -> Vec<f64> {
        self.resets.iter().map(|r| r.t).collect()
    }
}

/// Runs `osc` from phase/period as given through `train` on a fixed grid of step `dt`
/// up to `t_end`, starting at time 0. The input oscillator is left untouched.
pub fn entrain(
    osc: &AdaptiveOscillator,
    train: &PulseTrain,
    dt: f64,
    t_end: f64,
) -> Result<EntrainmentTrace> {
    let mut osc = *osc;
    simulate(&mut osc, train, dt, 0.0, t_end)
}

/// Like [`entrain`] but mutates `osc` in place and starts the clock at `t_start`,
/// so consecutive calls continue one oscillator across separate inputs. Pulses
/// before `t_start` are ignored.
pub fn simulate(
    osc: &mut AdaptiveOscillator,
    train: &PulseTrain,
    dt: f64,
    t_start: f64,
    t_end: f64,
) -> Result<EntrainmentTrace> {
    if !(dt > 0.0 && dt.is_finite()) {
        return domain(format!("dt must be positive, got {dt}"));
    }
    let limit = osc.params.max_dt();
    if dt > limit * (1.0 + STEP_SLACK) {
        return Err(Error::StepContract { dt, limit });
    }
    if !(t_end >= t_start) {
        return domain(format!("t_end {t_end} precedes t_start {t_start}"));
    }
    if let Some(last) = train.last_time() {
        if last > t_end {
            return domain(format!("t_end {t_end} precedes last pulse at {last}"));
        }
    }

    let params = TraceParams {
        oscillator: osc.params,
        initial_phase: osc.phase,
        initial_period: osc.period,
        dt,
        t_start,
        t_end,
    };
    let pulses: Vec<&Pulse> = train.pulses().iter().filter(|p| p.time >= t_start).collect();
    let span = t_end - t_start;
    let n_steps = ((span / dt) * (1.0 - 1e-12)).ceil().max(0.0) as usize;

    let mut samples = Vec::with_capacity(n_steps + 1);
    let mut resets = Vec::new();
    let mut next = 0;
    let mut t = t_start;

    let sample = |osc: &AdaptiveOscillator, t: f64| TraceSample {
        t,
        phase: osc.phase,
        period: osc.period,
        activation: osc.activation(),
    };

    for n in 0..=n_steps {
        let target = if n == n_steps { t_end } else { t_start + n as f64 * dt };
        while next < pulses.len() && pulses[next].time <= target {
            let pulse = pulses[next];
            osc.advance(pulse.time - t);
            t = t.max(pulse.time);
            let response = osc.couple(pulse)?;
            let coupled = response.reset || osc.params.coupling_mode == CouplingMode::Continuous;
            if coupled {
                resets.push(ResetEvent {
                    t: pulse.time,
                    interval: response.observed_interval,
                    activation: response.arrival_activation,
                    period: osc.period,
                });
            }
            next += 1;
        }
        osc.advance(target - t);
        t = t.max(target);
        samples.push(sample(osc, target));
    }

    Ok(EntrainmentTrace {
        params,
        samples,
        resets,
        pulses_received: pulses.len(),
    })
}

/// Mean arrival activation over the last `window` resets; 0 when there are none.
pub fn synchrony_output(trace: &EntrainmentTrace, window: usize) -> Result<f64> {
    if window == 0 {
        return domain("synchrony window must be >= 1");
    }
    let recent = &trace.resets[trace.resets.len().saturating_sub(window)..];
    if recent.is_empty() {
        return Ok(0.0);
    }
    Ok(recent.iter().map(|r| r.activation).sum::<f64>() / recent.len() as f64)
}
