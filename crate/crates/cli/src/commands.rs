use std::fs::File;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rhythm_core::analysis::{
    measure_phase, mode_report, mora_regression, simulate_tempo_discrimination, tag_phases,
    write_phase_csv, GroupTag, TempoConfig, DEFAULT_BANDWIDTH,
};
use rhythm_core::meter::{detect_meter, MeterConfig, MeterTolerances};
use rhythm_core::stimuli::{
    drop_pulses, gen_hierarchical_rotated, gen_jittered, gen_mora_dataset, gen_periodic,
    gen_poisson, gen_syllable_wav, gen_take_cards, MoraDatasetParams, MoraPoint, SyllableParams,
};
use rhythm_core::{
    entrain, extract_beats, load_audio, synchrony_output, write_wav, AdaptiveOscillator,
    BeatConfig, BeatList, OscillatorParams, PulseTrain,
};
use serde_json::{json, Value};

use crate::config::Resolver;
use crate::output::{emit, json_bytes, sidecar_path, write_atomic};
use crate::{
    BeatsArgs, Cli, Command, DiscriminateArgs, EntrainArgs, MeterArgs, MoraArgs, OscArgs,
    PhasesArgs, StimCommand,
};

pub fn run(cli: Cli) -> Result<()> {
    if cli.version {
        print!("{}", version_text()?);
        return Ok(());
    }
    let Some(command) = cli.command else {
        bail!("no command given; see `rhythm --help`");
    };
    let out = cli.out.as_deref();
    let config = cli.config.as_deref();
    match command {
        Command::Entrain(a) => cmd_entrain(&a, &mut Resolver::load(config, "entrain")?, out),
        Command::Beats(a) => cmd_beats(&a, &mut Resolver::load(config, "beats")?, out),
        Command::Phases(a) => cmd_phases(&a, &mut Resolver::load(config, "phases")?, out),
        Command::Meter(a) => cmd_meter(&a, &mut Resolver::load(config, "meter")?, out),
        Command::Mora(a) => cmd_mora(&a, &mut Resolver::load(config, "mora")?, out),
        Command::Discriminate(a) => {
            cmd_discriminate(&a, &mut Resolver::load(config, "discriminate")?, out)
        }
        Command::Stimgen(s) => cmd_stimgen(s, config, cli.seed, out),
    }
}

fn version_text() -> Result<String> {
    let defaults = json!({
        "oscillator": OscillatorParams::default(),
        "beats": BeatConfig::default(),
        "phases": { "bandwidth": DEFAULT_BANDWIDTH },
        "meter": MeterConfig::default(),
        "tempo": TempoConfig::default(),
        "mora": MoraDatasetParams::default(),
        "syllables": SyllableParams::default(),
    });
    let mut text = format!("rhythm {}\ndefaults:\n", env!("CARGO_PKG_VERSION"));
    text.push_str(&String::from_utf8(json_bytes(&defaults)?).map_err(crate::internal)?);
    Ok(text)
}

fn document(command: &str, inputs: Value, r: &Resolver, result: Value) -> Value {
    json!({ "command": command, "inputs": inputs, "params": r.echo(), "result": result })
}

fn path_value(p: &Path) -> Value {
    Value::String(p.display().to_string())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_train(path: &Path) -> Result<PulseTrain> {
    PulseTrain::read_csv(open(path)?).with_context(|| format!("in {}", path.display()))
}

/// Reads the `time_s` column of a CSV file.
fn read_times(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == "time_s")
        .ok_or_else(|| anyhow!("{} has no `time_s` column", path.display()))?;
    let mut times = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let field = row.get(col).unwrap_or("");
        times.push(
            field
                .parse::<f64>()
                .with_context(|| format!("{} row {}: bad time `{field}`", path.display(), i + 1))?,
        );
    }
    Ok(times)
}

fn osc_params(a: &OscArgs, r: &mut Resolver) -> Result<OscillatorParams> {
    let d = OscillatorParams::default();
    let p = OscillatorParams {
        resting_period: r.get("resting-period", a.resting_period, d.resting_period)?,
        adaptation_rate: r.get("adaptation-rate", a.adaptation_rate, d.adaptation_rate)?,
        decay_rate: r.get("decay-rate", a.decay_rate, d.decay_rate)?,
        period_min: r.get("period-min", a.period_min, d.period_min)?,
        period_max: r.get("period-max", a.period_max, d.period_max)?,
        coupling_mode: r.get("coupling-mode", a.coupling_mode, d.coupling_mode)?,
        continuous_gain: r.get("continuous-gain", a.continuous_gain, d.continuous_gain)?,
    };
    p.validate()?;
    Ok(p)
}

fn cmd_entrain(a: &EntrainArgs, r: &mut Resolver, out: Option<&Path>) -> Result<()> {
    let train = read_train(&a.train)?;
    let params = osc_params(&a.osc, r)?;
    let phase = r.get("initial-phase", a.initial_phase, 0.0)?;
    let period = r.get("initial-period", a.initial_period, params.resting_period)?;
    let dt = r.get("dt", a.dt, params.max_dt() / 2.0)?;
    let t_end = r.get("t-end", a.t_end, train.last_time().unwrap_or(0.0) + 1.0)?;
    let window = r.get("window", a.window, 4usize)?;

    let osc = AdaptiveOscillator::with_state(params, phase, period)?;
    let trace = entrain(&osc, &train, dt, t_end)?;
    let summary = json!({
        "pulses_received": trace.pulses_received,
        "resets": trace.resets.len(),
        "final_period": trace.final_period().unwrap_or(period),
        "synchrony": synchrony_output(&trace, window)?,
        "trace": trace,
    });
    let doc = document("entrain", json!({ "train": path_value(&a.train) }), r, summary);
    emit(out, &json_bytes(&doc)?)
}

fn cmd_beats(a: &BeatsArgs, r: &mut Resolver, out: Option<&Path>) -> Result<()> {
    let audio = load_audio(&a.wav)?;
    let d = BeatConfig::default();
    let cfg = BeatConfig {
        bands: r.get("bands", a.bands, d.bands)?,
        lo_hz: r.get("lo-hz", a.lo_hz, d.lo_hz)?,
        hi_hz: r.get("hi-hz", a.hi_hz, d.hi_hz)?,
        smooth1_ms: r.get("smooth1-ms", a.smooth1_ms, d.smooth1_ms)?,
        smooth2_ms: r.get("smooth2-ms", a.smooth2_ms, d.smooth2_ms)?,
        min_rise_fraction: r.get("min-rise-fraction", a.min_rise_fraction, d.min_rise_fraction)?,
    };
    let beats = extract_beats(&audio, &cfg)?;
    let mut csv = Vec::new();
    beats.write_csv(&mut csv)?;
    emit(out, &csv)?;
    if let Some(path) = out {
        let meta = document(
            "beats",
            json!({ "wav": path_value(&a.wav) }),
            r,
            json!({ "beats": beats.len(), "source_duration": beats.source_duration, "sample_rate": audio.sample_rate }),
        );
        write_atomic(&sidecar_path(path), &json_bytes(&meta)?)?;
    }
    Ok(())
}

fn cmd_phases(a: &PhasesArgs, r: &mut Resolver, out: Option<&Path>) -> Result<()> {
    let targets = BeatList::read_csv(open(&a.beats)?).with_context(|| format!("in {}", a.beats.display()))?;
    let anchors = read_times(&a.anchors)?;
    let bandwidth = r.get("bandwidth", a.bandwidth, DEFAULT_BANDWIDTH)?;
    let trial = r.get("trial", a.trial, 1u32)?;
    let group: GroupTag = match r.get("group", a.group.clone(), "with-stimulus".to_string())?.as_str() {
        "with-stimulus" => GroupTag::WithStimulus,
        "post-stimulus" => GroupTag::PostStimulus,
        "post-pause" => GroupTag::PostPause,
        other => bail!("unknown group `{other}` (with-stimulus | post-stimulus | post-pause)"),
    };

    let measured = measure_phase(&targets, &anchors)?;
    let modes = if measured.phases.is_empty() {
        Value::Null
    } else {
        serde_json::to_value(mode_report(&measured.phases, bandwidth)?)?
    };
    let samples = tag_phases(&measured.phases, trial, group);
    if let Some(path) = &a.phases_csv {
        let mut csv = Vec::new();
        write_phase_csv(&samples, &mut csv)?;
        write_atomic(path, &csv)?;
    }
    let doc = document(
        "phases",
        json!({ "beats": path_value(&a.beats), "anchors": path_value(&a.anchors) }),
        r,
        json!({ "dropped": measured.dropped, "phases": measured.phases, "modes": modes }),
    );
    emit(out, &json_bytes(&doc)?)
}

fn cmd_meter(a: &MeterArgs, r: &mut Resolver, out: Option<&Path>) -> Result<()> {
    let train = read_train(&a.train)?;
    let d = MeterConfig::default();
    let dt = MeterTolerances::default();
    let osc = OscillatorParams {
        adaptation_rate: r.get("adaptation-rate", a.adaptation_rate, d.oscillator.adaptation_rate)?,
        decay_rate: r.get("decay-rate", a.decay_rate, d.oscillator.decay_rate)?,
        ..d.oscillator
    };
    let cfg = MeterConfig {
        beat_range: (r.get("beat-min", a.beat_min, d.beat_range.0)?, r.get("beat-max", a.beat_max, d.beat_range.1)?),
        measure_range: (
            r.get("measure-min", a.measure_min, d.measure_range.0)?,
            r.get("measure-max", a.measure_max, d.measure_range.1)?,
        ),
        count_per_level: r.get("count-per-level", a.count_per_level, d.count_per_level)?,
        bound_ratio: r.get("bound-ratio", a.bound_ratio, d.bound_ratio)?,
        strong_threshold: r.get("strong-threshold", a.strong_threshold, d.strong_threshold)?,
        oscillator: osc,
        tolerances: MeterTolerances {
            window: r.get("window", a.window, dt.window)?,
            ratio_tolerance: r.get("ratio-tolerance", a.ratio_tolerance, dt.ratio_tolerance)?,
            align_fraction: r.get("align-fraction", a.align_fraction, dt.align_fraction)?,
            min_score: r.get("min-score", a.min_score, dt.min_score)?,
            score_tie: r.get("score-tie", a.score_tie, dt.score_tie)?,
        },
    };
    let outcome = detect_meter(&train, &cfg)?;
    let doc = document("meter", json!({ "train": path_value(&a.train) }), r, serde_json::to_value(outcome)?);
    emit(out, &json_bytes(&doc)?)
}

fn cmd_mora(a: &MoraArgs, r: &mut Resolver, out: Option<&Path>) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(&a.points)?);
    let points = rdr
        .deserialize::<MoraPoint>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .with_context(|| format!("in {}", a.points.display()))?;
    let fit = mora_regression(&points)?;
    let doc = document("mora", json!({ "points": path_value(&a.points) }), r, serde_json::to_value(fit)?);
    emit(out, &json_bytes(&doc)?)
}

fn cmd_discriminate(a: &DiscriminateArgs, r: &mut Resolver, out: Option<&Path>) -> Result<()> {
    let series_a = read_train(&a.series_a)?;
    let series_b = read_train(&a.series_b)?;
    let d = TempoConfig::default();
    let cfg = TempoConfig {
        oscillator: osc_params(&a.osc, r)?,
        jnd: r.get("jnd", a.jnd, d.jnd)?,
        pause: r.get("pause", a.pause, d.pause)?,
        reset_per_series: r.get("reset-per-series", a.reset_per_series.then_some(true), d.reset_per_series)?,
    };
    let outcome = simulate_tempo_discrimination(&series_a, &series_b, &cfg)?;
    let doc = document(
        "discriminate",
        json!({ "series_a": path_value(&a.series_a), "series_b": path_value(&a.series_b) }),
        r,
        serde_json::to_value(outcome)?,
    );
    emit(out, &json_bytes(&doc)?)
}

fn write_train(train: &PulseTrain, name: &str, r: &Resolver, out: Option<&Path>) -> Result<()> {
    let mut csv = Vec::new();
    train.write_csv(&mut csv)?;
    emit(out, &csv)?;
    if let Some(path) = out {
        let meta = document(name, json!({}), r, json!({ "pulses": train.len() }));
        write_atomic(&sidecar_path(path), &json_bytes(&meta)?)?;
    }
    Ok(())
}

fn with_drops(train: PulseTrain, r: &mut Resolver, drop: &Option<Vec<usize>>) -> Result<PulseTrain> {
    let drops = r.get("drop", drop.clone(), Vec::new())?;
    Ok(drop_pulses(&train, &drops)?)
}

fn cmd_stimgen(cmd: StimCommand, config: Option<&Path>, seed: Option<u64>, out: Option<&Path>) -> Result<()> {
    match cmd {
        StimCommand::Periodic(a) => {
            let r = &mut Resolver::load(config, "periodic")?;
            let period = r.get("period", a.period, 0.5)?;
            let train = gen_periodic(
                period,
                r.get("count", a.count, 20)?,
                r.get("amplitude", a.amplitude, 1.0)?,
                r.get("start", a.start, 0.0)?,
            )?;
            let train = with_drops(train, r, &a.drop)?;
            write_train(&train, "stimgen periodic", r, out)
        }
        StimCommand::Jittered(a) => {
            let r = &mut Resolver::load(config, "jittered")?;
            let period = r.get("period", a.period, 0.5)?;
            let train = gen_jittered(
                period,
                r.get("count", a.count, 20)?,
                r.get("amplitude", a.amplitude, 1.0)?,
                r.get("jitter-sd", a.jitter_sd, 0.05 * period)?,
                r.get("start", a.start, period)?,
                r.get("seed", seed, 0)?,
            )?;
            let train = with_drops(train, r, &a.drop)?;
            write_train(&train, "stimgen jittered", r, out)
        }
        StimCommand::Hierarchical(a) => {
            let r = &mut Resolver::load(config, "hierarchical")?;
            let train = gen_hierarchical_rotated(
                r.get("beat-period", a.beat_period, 0.4)?,
                r.get("beats-per-measure", a.beats_per_measure, 3)?,
                r.get("strong", a.strong, 1.0)?,
                r.get("weak", a.weak, 0.5)?,
                r.get("measures", a.measures, 12)?,
                r.get("rotation", a.rotation, 0)?,
            )?;
            write_train(&train, "stimgen hierarchical", r, out)
        }
        StimCommand::Poisson(a) => {
            let r = &mut Resolver::load(config, "poisson")?;
            let train = gen_poisson(
                r.get("mean-interval", a.mean_interval, 0.4)?,
                r.get("count", a.count, 36)?,
                r.get("strong-prob", a.strong_prob, 1.0 / 3.0)?,
                r.get("strong", a.strong, 1.0)?,
                r.get("weak", a.weak, 0.5)?,
                r.get("start", a.start, 0.0)?,
                r.get("seed", seed, 0)?,
            )?;
            write_train(&train, "stimgen poisson", r, out)
        }
        StimCommand::TakeCards(a) => {
            let r = &mut Resolver::load(config, "take-cards")?;
            let schedule = gen_take_cards(
                r.get("phi", a.phi, 0.5)?,
                r.get("cycle", a.cycle, 1.5)?,
                r.get("reps", a.reps, 8)?,
            )?;
            let doc = document("stimgen take-cards", json!({}), r, serde_json::to_value(schedule)?);
            emit(out, &json_bytes(&doc)?)
        }
        StimCommand::Mora(a) => {
            let r = &mut Resolver::load(config, "mora-gen")?;
            let d = MoraDatasetParams::default();
            let params = MoraDatasetParams {
                mean_mora: r.get("mean-mora", a.mean_mora, d.mean_mora)?,
                max_moras: r.get("max-moras", a.max_moras, d.max_moras)?,
                reps: r.get("reps", a.reps, d.reps)?,
                compensation: r.get("compensation", a.compensation, d.compensation)?,
                mora_sd: r.get("mora-sd", a.mora_sd, d.mora_sd)?,
                noise_sd: r.get("noise-sd", a.noise_sd, d.noise_sd)?,
                seed: r.get("seed", seed, d.seed)?,
            };
            let points = gen_mora_dataset(&params)?;
            let mut wtr = csv::Writer::from_writer(Vec::new());
            for p in &points {
                wtr.serialize(p)?;
            }
            let csv = wtr.into_inner().map_err(crate::internal)?;
            emit(out, &csv)?;
            if let Some(path) = out {
                let meta = document("stimgen mora", json!({}), r, json!({ "points": points.len() }));
                write_atomic(&sidecar_path(path), &json_bytes(&meta)?)?;
            }
            Ok(())
        }
        StimCommand::Syllables(a) => {
            let r = &mut Resolver::load(config, "syllables")?;
            let Some(path) = out else {
                bail!("syllables writes a WAV file; pass --out");
            };
            let d = SyllableParams::default();
            let params = SyllableParams {
                onsets: r.get("onsets", a.onsets, d.onsets)?,
                rise_ms: r.get("rise-ms", a.rise_ms, d.rise_ms)?,
                dur_ms: r.get("dur-ms", a.dur_ms, d.dur_ms)?,
                decay_ms: r.get("decay-ms", a.decay_ms, d.decay_ms)?,
                duration_s: r.get("duration", a.duration, d.duration_s)?,
                sample_rate: r.get("sample-rate", a.sample_rate, d.sample_rate)?,
                amplitude: r.get("amplitude", a.amplitude, d.amplitude)?,
                seed: r.get("seed", seed, d.seed)?,
            };
            let audio = gen_syllable_wav(&params)?;
            // hound writes in place, so render to a temporary sibling first
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let tmp = tempfile::Builder::new().suffix(".wav").tempfile_in(dir)?;
            write_wav(tmp.path(), &audio)?;
            tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
            let meta = document("stimgen syllables", json!({}), r, json!({ "samples": audio.len() }));
            write_atomic(&sidecar_path(path), &json_bytes(&meta)?)
        }
    }
}
