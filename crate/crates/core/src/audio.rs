//! Mono PCM16 WAV input and output.

use std::io::ErrorKind;
use std::path::Path;

use crate::error::{domain, Error, Result};

/// Mono samples in [-1, 1] with their sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return domain("sample rate must be positive");
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn silence(duration_s: f64, sample_rate: u32) -> Result<Self> {
        let n = (duration_s * sample_rate as f64).round().max(0.0) as usize;
        Self::new(vec![0.0; n], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn scaled(&self, gain: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|x| x * gain).collect(),
            sample_rate: self.sample_rate,
        }
    }

    /// Prepends `seconds` of silence (rounded to whole samples).
    pub fn delayed(&self, seconds: f64) -> Self {
        let pad = (seconds * self.sample_rate as f64).round().max(0.0) as usize;
        let mut samples = vec![0.0; pad];
        samples.extend_from_slice(&self.samples);
        Self { samples, sample_rate: self.sample_rate }
    }
}

/// Loads a mono 16-bit linear PCM WAV file.
pub fn load_audio(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let path = path.as_ref();
    let reader = hound::WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) if io.kind() == ErrorKind::NotFound => {
            Error::MissingFile(path.to_path_buf())
        }
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::UnsupportedEncoding(other.to_string()),
    })?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(Error::NotMono(spec.channels));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        return Err(Error::UnsupportedEncoding(format!(
            "{:?} {}-bit, expected 16-bit integer PCM",
            spec.sample_format, spec.bits_per_sample
        )));
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| v as f64 / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::UnsupportedEncoding(e.to_string()))?;
    if samples.is_empty() {
        return Err(Error::EmptyAudio);
    }
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Writes a buffer as mono PCM16, clipping to [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let io_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::Io(io),
        other => Error::UnsupportedEncoding(other.to_string()),
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(io_err)?;
    for &x in &audio.samples {
        writer.write_sample(quantize(x)).map_err(io_err)?;
    }
    writer.finalize().map_err(io_err)
}

fn quantize(x: f64) -> i16 {
    (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
}
