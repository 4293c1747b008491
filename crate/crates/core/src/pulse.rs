//! Timestamped input pulses, the common rhythmic input of every simulation.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A single input event: a time in seconds and an amplitude in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    #[serde(rename = "time_s")]
    pub time: f64,
    pub amplitude: f64,
}

impl Pulse {
    pub fn new(time: f64, amplitude: f64) -> Result<Self> {
        if !(time.is_finite() && time >= 0.0) {
            return domain(format!("pulse time must be finite and >= 0, got {time}"));
        }
        if !(amplitude > 0.0 && amplitude <= 1.0) {
            return domain(format!("pulse amplitude must lie in (0, 1], got {amplitude}"));
        }
        Ok(Self { time, amplitude })
    }
}

/// Pulses ordered by strictly increasing time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Pulse>", into = "Vec<Pulse>")]
pub struct PulseTrain {
    pulses: Vec<Pulse>,
}

impl PulseTrain {
    pub fn new(pulses: Vec<Pulse>) -> Result<Self> {
        for p in &pulses {
            Pulse::new(p.time, p.amplitude)?;
        }
        if let Some(w) = pulses.windows(2).find(|w| w[1].time <= w[0].time) {
            return domain(format!(
                "pulse times must be strictly increasing ({} then {})",
                w[0].time, w[1].time
            ));
        }
        Ok(Self { pulses })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a train from `(time, amplitude)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(t, a)| Pulse { time: t, amplitude: a })
                .collect(),
        )
    }

    pub fn pulses(&self) -> &[Pulse] {
        &self.pulses
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.pulses.iter().map(|p| p.time).collect()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.pulses.last().map(|p| p.time)
    }

    /// Returns a copy with every time multiplied by `k` (k > 0).
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return domain("time scale must be positive");
        }
        Self::new(
            self.pulses
                .iter()
                .map(|p| Pulse { time: p.time * k, amplitude: p.amplitude })
                .collect(),
        )
    }

    /// Returns a copy with every time shifted by `offset` seconds.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(
            self.pulses
                .iter()
                .map(|p| Pulse { time: p.time + offset, amplitude: p.amplitude })
                .collect(),
        )
    }

    /// Keeps only pulses whose amplitude is at least `threshold`.
    pub fn gated(&self, threshold: f64) -> Self {
        Self {
            pulses: self
                .pulses
                .iter()
                .copied()
                .filter(|p| p.amplitude >= threshold)
                .collect(),
        }
    }

    /// Reads the `time_s,amplitude` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["time_s", "amplitude"] {
            return Err(Error::Parse(format!(
                "expected header `time_s,amplitude`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut pulses = Vec::new();
        for row in rdr.deserialize::<Pulse>() {
            pulses.push(row?);
        }
        Self::new(pulses).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["time_s", "amplitude"])?;
        for p in &self.pulses {
            wtr.write_record([p.time.to_string(), p.amplitude.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

impl TryFrom<Vec<Pulse>> for PulseTrain {
    type Error = Error;

    fn try_from(pulses: Vec<Pulse>) -> Result<Self> {
        Self::new(pulses)
    }
}

impl From<PulseTrain> for Vec<Pulse> {
    fn from(train: PulseTrain) -> Self {
        train.pulses
    }
}
