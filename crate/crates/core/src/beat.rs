//! Acoustic beat extraction from speech.
//!
//! Audio goes through a bank of 4th-order gammatone filters spaced evenly on the
//! ERB-rate scale. Channel outputs are half-wave rectified, summed and smoothed
//! into a sonority envelope, which is rectified and smoothed again. Every rise of
//! the envelope (a local minimum followed by a local maximum) is a candidate
//! beat, placed halfway in time between the two and weighted by the rise height
//! relative to the largest rise of the utterance.

use std::f64::consts::TAU;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::audio::AudioBuffer;
use crate::error::{domain, Error, Result};

/// Parameters of the envelope and rise detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatConfig {
    pub bands: usize,
    pub lo_hz: f64,
    pub hi_hz: f64,
    pub smooth1_ms: f64,
    pub smooth2_ms: f64,
    pub min_rise_fraction: f64,
}

impl Default for BeatConfig {
    fn default() -> Self {
        Self {
            bands: 6,
            lo_hz: 300.0,
            hi_hz: 2000.0,
            smooth1_ms: 20.0,
            smooth2_ms: 40.0,
            min_rise_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: Vec<f64>,
    pub sample_rate: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Beat {
    #[serde(rename = "time_s")]
    pub time: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeatList {
    pub beats: Vec<Beat>,
    pub source_duration: f64,
}

impl BeatList {
    pub fn times(&self) -> Vec<f64> {
        self.beats.iter().map(|b| b.time).collect()
    }

    pub fn len(&self) -> usize {
        self.beats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beats.is_empty()
    }

    /// Writes the `time_s,magnitude` CSV format.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["time_s", "magnitude"])?;
        for b in &self.beats {
            wtr.write_record([b.time.to_string(), b.magnitude.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the `time_s,magnitude` CSV format. The source duration is unknown
    /// from the table alone and is set to the last beat time.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["time_s", "magnitude"] {
            return Err(Error::Parse("expected header `time_s,magnitude`".into()));
        }
        let mut beats: Vec<Beat> = Vec::new();
        for row in rdr.deserialize::<Beat>() {
            let b = row?;
            if !(b.magnitude > 0.0 && b.magnitude <= 1.0) {
                return Err(Error::Parse(format!("beat magnitude {} outside (0, 1]", b.magnitude)));
            }
            if beats.last().is_some_and(|prev| prev.time >= b.time) {
                return Err(Error::Parse("beat times must be strictly increasing".into()));
            }
            beats.push(b);
        }
        let source_duration = beats.last().map_or(0.0, |b| b.time);
        Ok(Self { beats, source_duration })
    }
}

/// Equivalent rectangular bandwidth in Hz (Glasberg & Moore).
pub fn erb_hz(f: f64) -> f64 {
    24.7 * (4.37e-3 * f + 1.0)
}

pub fn erb_rate(f: f64) -> f64 {
    21.4 * (4.37e-3 * f + 1.0).log10()
}

pub fn erb_rate_inverse(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) / 4.37e-3
}

/// `bands` center frequencies equally spaced in ERB-rate from `lo` to `hi` inclusive.
pub fn erb_centers(bands: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (erb_rate(lo), erb_rate(hi));
    if bands == 1 {
        return vec![erb_rate_inverse(0.5 * (a + b))];
    }
    (0..bands)
        .map(|i| erb_rate_inverse(a + (b - a) * i as f64 / (bands - 1) as f64))
        .collect()
}

/// 4th-order gammatone filter realised as four cascaded complex one-pole
/// resonators; the real part of the cascade output has unit gain at the center.
#[derive(Debug, Clone)]
pub struct Gammatone {
    center_hz: f64,
    pole_re: f64,
    pole_im: f64,
    gain: f64,
}

impl Gammatone {
    pub fn new(center_hz: f64, sample_rate: f64) -> Self {
        let bandwidth = 1.019 * erb_hz(center_hz);
        let radius = (-TAU * bandwidth / sample_rate).exp();
        let omega = TAU * center_hz / sample_rate;
        Self {
            center_hz,
            pole_re: radius * omega.cos(),
            pole_im: radius * omega.sin(),
            gain: 1.0 - radius,
        }
    }

    pub fn center_hz(&self) -> f64 {
        self.center_hz
    }

    pub fn filter(&self, input: &[f64]) -> Vec<f64> {
        let mut re = [0.0f64; 4];
        let mut im = [0.0f64; 4];
        input
            .iter()
            .map(|&x| {
                let (mut xr, mut xi) = (x, 0.0);
                for k in 0..4 {
                    let yr = self.gain * xr + self.pole_re * re[k] - self.pole_im * im[k];
                    let yi = self.gain * xi + self.pole_im * re[k] + self.pole_re * im[k];
                    re[k] = yr;
                    im[k] = yi;
                    xr = yr;
                    xi = yi;
                }
                2.0 * xr
            })
            .collect()
    }
}

/// Causal first-order low-pass with the given time constant, starting at rest.
pub fn smooth(x: &[f64], time_constant_s: f64, sample_rate: f64) -> Vec<f64> {
    let a = 1.0 - (-1.0 / (time_constant_s * sample_rate)).exp();
    let mut state = 0.0;
    x.iter()
        .map(|&v| {
            state += a * (v - state);
            state
        })
        .collect()
}

fn check_band_edges(bands: usize, lo: f64, hi: f64, sample_rate: u32) -> Result<()> {
    if bands == 0 {
        return domain("need at least one band");
    }
    let nyquist = sample_rate as f64 / 2.0;
    if !(lo > 0.0 && lo < hi && hi < nyquist) {
        return domain(format!(
            "band edges must satisfy 0 < lo < hi < sample_rate/2 ({nyquist} Hz), got [{lo}, {hi}]"
        ));
    }
    Ok(())
}

/// Sonority envelope of `audio`; same length and rate as the input.
pub fn sonority_envelope(
    audio: &AudioBuffer,
    bands: usize,
    lo_hz: f64,
    hi_hz: f64,
    smooth1_ms: f64,
    smooth2_ms: f64,
) -> Result<Envelope> {
    check_band_edges(bands, lo_hz, hi_hz, audio.sample_rate)?;
    if !(smooth1_ms > 0.0 && smooth2_ms > 0.0) {
        return domain("smoothing time constants must be positive");
    }
    let fs = audio.sample_rate as f64;
    let mut sum = vec![0.0; audio.len()];
    for fc in erb_centers(bands, lo_hz, hi_hz) {
        let channel = Gammatone::new(fc, fs).filter(&audio.samples);
        for (acc, y) in sum.iter_mut().zip(channel) {
            *acc += y.max(0.0);
        }
    }
    let first = smooth(&sum, smooth1_ms / 1000.0, fs);
    let rectified: Vec<f64> = first.into_iter().map(|v| v.max(0.0)).collect();
    let values = smooth(&rectified, smooth2_ms / 1000.0, fs)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    Ok(Envelope { values, sample_rate: audio.sample_rate })
}

/// One rise of the envelope, as sample indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rise {
    pub min_index: usize,
    pub max_index: usize,
    pub height: f64,
}

/// Every local-minimum to local-maximum rise, in time order. Plateaus count as
/// one extremum; a minimum plateau is located at its last sample and a maximum
/// plateau at its first.
pub fn find_rises(values: &[f64]) -> Vec<Rise> {
    // run-length compress exact repeats
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match runs.last_mut() {
            Some(run) if run.2 == v => run.1 = i,
            _ => runs.push((i, i, v)),
        }
    }
    let mut rises = Vec::new();
    let mut pending_min: Option<(usize, f64)> = None;
    for k in 0..runs.len() {
        let (start, end, v) = runs[k];
        let prev = k.checked_sub(1).map(|j| runs[j].2);
        let next = runs.get(k + 1).map(|r| r.2);
        let is_min = prev.is_none_or(|p| p > v) && next.is_some_and(|n| n > v);
        let is_max = prev.is_some_and(|p| p < v) && next.is_none_or(|n| n < v);
        if is_min {
            pending_min = Some((end, v));
        } else if is_max {
            if let Some((min_index, min_value)) = pending_min.take() {
                rises.push(Rise { min_index, max_index: start, height: v - min_value });
            }
        }
    }
    rises
}

/// Turns envelope rises into beats, each halfway in time between the minimum
/// and the peak. Rises smaller than `min_rise_fraction` of the largest rise are
/// discarded.
pub fn detect_beats(env: &Envelope, min_rise_fraction: f64) -> Result<BeatList> {
    if !(min_rise_fraction > 0.0 && min_rise_fraction < 1.0) {
        return domain(format!("min_rise_fraction must lie in (0, 1), got {min_rise_fraction}"));
    }
    let fs = env.sample_rate as f64;
    let source_duration = env.values.len() as f64 / fs;
    let rises = find_rises(&env.values);
    let largest = rises.iter().map(|r| r.height).fold(0.0, f64::max);
    if !(largest > 0.0) {
        return Ok(BeatList { beats: Vec::new(), source_duration });
    }
    let beats = rises
        .iter()
        .filter(|r| r.height >= min_rise_fraction * largest)
        .map(|r| Beat {
            time: 0.5 * (r.min_index + r.max_index) as f64 / fs,
            magnitude: r.height / largest,
        })
        .collect();
    Ok(BeatList { beats, source_duration })
}

/// Full pipeline: envelope then rise detection.
pub fn extract_beats(audio: &AudioBuffer, config: &BeatConfig) -> Result<BeatList> {
    let env = sonority_envelope(
        audio,
        config.bands,
        config.lo_hz,
        config.hi_hz,
        config.smooth1_ms,
        config.smooth2_ms,
    )?;
    detect_beats(&env, config.min_rise_fraction)
}
