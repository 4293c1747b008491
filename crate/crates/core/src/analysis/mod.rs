//! Statistics over extracted rhythms: relative phase of target beats within
//! anchor cycles, circular mode finding, mora-count regression, inter-beat
//! interval statistics and simulated tempo discrimination.

mod modes;
mod mora;
mod phase;
mod tempo;

pub use modes::{circular_kde, mode_report, Mode, ModeReport, DEFAULT_BANDWIDTH};
pub use mora::{mora_regression, MoraRegression};
pub use phase::{
    interval_stats, measure_phase, nominal_phases, read_phase_csv, tag_phases, write_phase_csv,
    GroupTag, IntervalStats, PhaseMeasurement, PhaseSample,
};
pub use tempo::{simulate_tempo_discrimination, TempoConfig, TempoJudgement, TempoOutcome};
