//! Rhythm perception and production toolkit: adaptive oscillators that entrain to
//! pulse trains, beat extraction from speech audio, two-level meter induction, and
//! the timing analyses built on them.

// `!(x > 0.0)` style guards deliberately reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod audio;
pub mod beat;
pub mod error;
pub mod meter;
pub mod oscillator;
pub mod pulse;
pub mod stimuli;

pub use error::{Error, Result};
pub use oscillator::{
    activation, entrain, simulate, synchrony_output, AdaptiveOscillator, CouplingMode,
    EntrainmentTrace, OscillatorParams, PulseResponse, ResetEvent, TraceParams, TraceSample,
};
pub use pulse::{Pulse, PulseTrain};
pub use audio::{load_audio, write_wav, AudioBuffer};
pub use beat::{detect_beats, extract_beats, sonority_envelope, Beat, BeatConfig, BeatList, Envelope};
