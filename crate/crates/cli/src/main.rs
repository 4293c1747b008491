//! `rhythm`: simulations and analyses of rhythmic timing from the command line.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rhythm_core::CouplingMode;

#[derive(Parser)]
#[command(
    name = "rhythm",
    about = "Adaptive-oscillator rhythm simulations, beat extraction and timing analyses",
    disable_version_flag = true
)]
struct Cli {
    /// Random seed for generators.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// TOML file of parameter defaults, keyed by flag name.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the version and every parameter default.
    #[arg(long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Entrain one oscillator to a pulse train and write its trace as JSON.
    Entrain(EntrainArgs),
    /// Extract acoustic beats from a mono 16-bit WAV file.
    Beats(BeatsArgs),
    /// Relative phase of target beats within anchor cycles, with a mode report.
    Phases(PhasesArgs),
    /// Estimate two-level meter from a pulse train.
    Meter(MeterArgs),
    /// Regress word duration on mora count.
    Mora(MoraArgs),
    /// Judge whether a second pulse series is faster than a first.
    Discriminate(DiscriminateArgs),
    /// Generate stimuli.
    #[command(subcommand)]
    Stimgen(StimCommand),
}

fn parse_mode(s: &str) -> Result<CouplingMode, String> {
    match s {
        "phase-reset" | "phase_reset" => Ok(CouplingMode::PhaseReset),
        "continuous" => Ok(CouplingMode::Continuous),
        other => Err(format!("unknown coupling mode `{other}` (phase-reset | continuous)")),
    }
}

#[derive(Args)]
struct OscArgs {
    #[arg(long)]
    resting_period: Option<f64>,
    #[arg(long)]
    adaptation_rate: Option<f64>,
    #[arg(long)]
    decay_rate: Option<f64>,
    #[arg(long)]
    period_min: Option<f64>,
    #[arg(long)]
    period_max: Option<f64>,
    /// phase-reset or continuous.
    #[arg(long, value_parser = parse_mode)]
    coupling_mode: Option<CouplingMode>,
    #[arg(long)]
    continuous_gain: Option<f64>,
}

#[derive(Args)]
struct EntrainArgs {
    /// Pulse train CSV (`time_s,amplitude`).
    train: PathBuf,
    #[command(flatten)]
    osc: OscArgs,
    #[arg(long)]
    initial_phase: Option<f64>,
    #[arg(long)]
    initial_period: Option<f64>,
    /// Integration step; at most period-min / 10.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Resets averaged for the synchrony output.
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Args)]
struct BeatsArgs {
    wav: PathBuf,
    #[arg(long)]
    bands: Option<usize>,
    #[arg(long)]
    lo_hz: Option<f64>,
    #[arg(long)]
    hi_hz: Option<f64>,
    #[arg(long)]
    smooth1_ms: Option<f64>,
    #[arg(long)]
    smooth2_ms: Option<f64>,
    #[arg(long)]
    min_rise_fraction: Option<f64>,
}

#[derive(Args)]
struct PhasesArgs {
    /// Beat CSV (`time_s,magnitude`) of target beats.
    beats: PathBuf,
    /// CSV with a `time_s` column of anchor times.
    anchors: PathBuf,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    trial: Option<u32>,
    /// with-stimulus, post-stimulus or post-pause.
    #[arg(long)]
    group: Option<String>,
    /// Also write the per-beat phases as `trial,group,phi` CSV.
    #[arg(long)]
    phases_csv: Option<PathBuf>,
}

#[derive(Args)]
struct MeterArgs {
    train: PathBuf,
    #[arg(long)]
    beat_min: Option<f64>,
    #[arg(long)]
    beat_max: Option<f64>,
    #[arg(long)]
    measure_min: Option<f64>,
    #[arg(long)]
    measure_max: Option<f64>,
    #[arg(long)]
    count_per_level: Option<usize>,
    #[arg(long)]
    bound_ratio: Option<f64>,
    #[arg(long)]
    strong_threshold: Option<f64>,
    #[arg(long)]
    adaptation_rate: Option<f64>,
    #[arg(long)]
    decay_rate: Option<f64>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    ratio_tolerance: Option<f64>,
    #[arg(long)]
    align_fraction: Option<f64>,
    #[arg(long)]
    min_score: Option<f64>,
    #[arg(long)]
    score_tie: Option<f64>,
}

#[derive(Args)]
struct MoraArgs {
    /// CSV of `moras,duration_s`.
    points: PathBuf,
}

#[derive(Args)]
struct DiscriminateArgs {
    series_a: PathBuf,
    series_b: PathBuf,
    #[command(flatten)]
    osc: OscArgs,
    #[arg(long)]
    jnd: Option<f64>,
    #[arg(long)]
    pause: Option<f64>,
    /// Judge each series with a fresh oscillator.
    #[arg(long)]
    reset_per_series: bool,
}

#[derive(Subcommand)]
enum StimCommand {
    /// Evenly spaced pulses.
    Periodic(PeriodicArgs),
    /// Periodic pulses with Gaussian timing jitter.
    Jittered(JitteredArgs),
    /// Strong/weak pulses with a strong pulse every few beats.
    Hierarchical(HierarchicalArgs),
    /// Pulses with exponential gaps and random strong/weak amplitudes.
    Poisson(PoissonArgs),
    /// Anchor and target times for a phrase-repetition trial (JSON).
    TakeCards(TakeCardsArgs),
    /// Word durations by mora count.
    Mora(MoraGenArgs),
    /// Noise-burst syllable train as a WAV file.
    Syllables(SyllableArgs),
}

#[derive(Args)]
struct PeriodicArgs {
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    start: Option<f64>,
    /// Zero-based indices of pulses to delete.
    #[arg(long, value_delimiter = ',')]
    drop: Option<Vec<usize>>,
}

#[derive(Args)]
struct JitteredArgs {
    #[arg(long)]
    period: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    amplitude: Option<f64>,
    #[arg(long)]
    jitter_sd: Option<f64>,
    #[arg(long)]
    start: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    drop: Option<Vec<usize>>,
}

#[derive(Args)]
struct HierarchicalArgs {
    #[arg(long)]
    beat_period: Option<f64>,
    #[arg(long)]
    beats_per_measure: Option<usize>,
    #[arg(long)]
    strong: Option<f64>,
    #[arg(long)]
    weak: Option<f64>,
    #[arg(long)]
    measures: Option<usize>,
    /// Beats by which the downbeat is displaced.
    #[arg(long)]
    rotation: Option<usize>,
}

#[derive(Args)]
struct PoissonArgs {
    #[arg(long)]
    mean_interval: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    strong_prob: Option<f64>,
    #[arg(long)]
    strong: Option<f64>,
    #[arg(long)]
    weak: Option<f64>,
    #[arg(long)]
    start: Option<f64>,
}

#[derive(Args)]
struct TakeCardsArgs {
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    cycle: Option<f64>,
    #[arg(long)]
    reps: Option<usize>,
}

#[derive(Args)]
struct MoraGenArgs {
    #[arg(long)]
    mean_mora: Option<f64>,
    #[arg(long)]
    max_moras: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    compensation: Option<f64>,
    #[arg(long)]
    mora_sd: Option<f64>,
    #[arg(long)]
    noise_sd: Option<f64>,
}

#[derive(Args)]
struct SyllableArgs {
    /// Burst onset times in seconds, comma separated.
    #[arg(long, value_delimiter = ',')]
    onsets: Option<Vec<f64>>,
    #[arg(long)]
    rise_ms: Option<f64>,
    #[arg(long)]
    dur_ms: Option<f64>,
    #[arg(long)]
    decay_ms: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    sample_rate: Option<u32>,
    #[arg(long)]
    amplitude: Option<f64>,
}

/// A failure that is the program's fault rather than the input's.
#[derive(Debug)]
pub struct Internal(String);

impl fmt::Display for Internal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "internal error: {}", self.0)
    }
}

impl std::error::Error for Internal {}

pub fn internal(e: impl fmt::Display) -> anyhow::Error {
    Internal(e.to_string()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match std::panic::catch_unwind(|| commands::run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            if e.is::<Internal>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
        Err(_) => ExitCode::from(1),
    }
}
