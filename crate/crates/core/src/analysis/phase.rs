use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::beat::BeatList;
use crate::error::{domain, Error, Result};

/// Which part of a trial a production came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupTag {
    WithStimulus,
    PostStimulus,
    PostPause,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSample {
    pub trial: u32,
    pub group: GroupTag,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMeasurement {
    pub phases: Vec<f64>,
    /// Targets falling outside every anchor interval.
    pub dropped: usize,
}

/// Phase of each target beat within the anchor interval `[a_i, a_{i+1})` that
/// contains it.
pub fn measure_phase(targets: &BeatList, anchors: &[f64]) -> Result<PhaseMeasurement> {
    if anchors.len() < 2 {
        return domain("at least 2 anchor times are required");
    }
    if anchors.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("anchor times must be strictly increasing");
    }
    let mut phases = Vec::with_capacity(targets.len());
    let mut dropped = 0;
    for t in targets.times() {
        // index of the first anchor strictly after t
        let next = anchors.partition_point(|&a| a <= t);
        if next == 0 || next == anchors.len() {
            dropped += 1;
            continue;
        }
        let (a, b) = (anchors[next - 1], anchors[next]);
        phases.push(((t - a) / (b - a)).clamp(0.0, 1.0 - f64::EPSILON));
    }
    Ok(PhaseMeasurement { phases, dropped })
}

pub fn tag_phases(phases: &[f64], trial: u32, group: GroupTag) -> Vec<PhaseSample> {
    phases.iter().map(|&phi| PhaseSample { trial, group, phi }).collect()
}

/// Writes the `trial,group,phi` CSV format.
pub fn write_phase_csv<W: Write>(samples: &[PhaseSample], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in samples {
        wtr.serialize(s)?;
    }
    if samples.is_empty() {
        wtr.write_record(["trial", "group", "phi"])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_phase_csv<R: Read>(reader: R) -> Result<Vec<PhaseSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<PhaseSample>() {
        let s = row?;
        if !(0.0..1.0).contains(&s.phi) {
            return Err(Error::Parse(format!("phase {} outside [0, 1)", s.phi)));
        }
        out.push(s);
    }
    Ok(out)
}

/// Nominal phase of the `stress_position`-th beat (1-based) of a measure with
/// `beats_per_measure` beats.
pub fn nominal_phases(beats_per_measure: u32, stress_position: u32) -> Result<f64> {
    if !(1..=beats_per_measure).contains(&stress_position) {
        return domain(format!(
            "stress position {stress_position} outside 1..={beats_per_measure}"
        ));
    }
    Ok(f64::from(stress_position - 1) / f64::from(beats_per_measure))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    /// Number of intervals.
    pub count: usize,
}

/// Statistics of consecutive beat intervals.
pub fn interval_stats(beats: &BeatList) -> Result<IntervalStats> {
    if beats.len() < 2 {
        return domain("at least 2 beats are required");
    }
    let intervals: Vec<f64> = beats.times().windows(2).map(|w| w[1] - w[0]).collect();
    let n = intervals.len() as f64;
    let mean = intervals.iter().sum::<f64>() / n;
    let var = intervals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    Ok(IntervalStats { mean, sd: var.sqrt(), count: intervals.len() })
}
