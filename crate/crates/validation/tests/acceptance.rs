//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rhythm_core::analysis::{
    mode_report, mora_regression, nominal_phases, simulate_tempo_discrimination, TempoConfig,
    TempoJudgement, DEFAULT_BANDWIDTH,
};
use rhythm_core::meter::{detect_meter, MeterConfig};
use rhythm_core::stimuli::{
    drop_pulses, gen_hierarchical_rotated, gen_jittered, gen_mora_dataset, gen_periodic,
    gen_phase_mixture, gen_poisson, gen_syllable_wav, MoraDatasetParams, SyllableParams,
};
use rhythm_core::{entrain, extract_beats, AdaptiveOscillator, BeatConfig, OscillatorParams, PulseTrain};
use rhythm_validation::{rhythm_binary, Report};

fn dt(p: &OscillatorParams) -> f64 {
    p.max_dt() / 2.0
}

fn entrainment_convergence(report: &mut Report) {
    let (target, tol) = (0.6, 0.02 * 0.6);
    let p = OscillatorParams { resting_period: 0.5, adaptation_rate: 0.3, ..OscillatorParams::default() };
    let started = Instant::now();
    let osc = AdaptiveOscillator::new(p).unwrap();
    let train = gen_periodic(target, 12, 1.0, 0.0).unwrap();
    let trace = entrain(&osc, &train, dt(&p), train.last_time().unwrap()).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    // first reset after which the period stays within tolerance
    let settled = trace.resets.iter().rposition(|r| (r.period - target).abs() >= tol).map_or(0, |i| i + 1);
    let within = settled < 10 && settled < trace.resets.len();
    report.check(
        "1",
        "entrainment convergence",
        within && elapsed < 1.0,
        format!("within 2% from reset {} of {}, final {:.5}, {:.1} ms", settled + 1, trace.resets.len(), trace.final_period().unwrap(), elapsed * 1e3),
    );
}

fn jitter_smoothing(report: &mut Report) {
    let (period, sd) = (0.5, 0.025);
    let p = OscillatorParams::default();
    let osc = AdaptiveOscillator::new(p).unwrap();
    let within = (0..100u64)
        .filter(|&seed| {
            let train = gen_jittered(period, 20, 1.0, sd, period, seed).unwrap();
            let trace = entrain(&osc, &train, dt(&p), train.last_time().unwrap()).unwrap();
            trace.resets.len() >= 20 && (trace.resets[19].period - period).abs() < 0.025
        })
        .count();
    report.check("2", "jitter smoothing", within >= 90, format!("{within}/100 seeds within 0.025 after 20 resets"));
}

fn missing_pulses(report: &mut Report) {
    let target = 0.6;
    let p = OscillatorParams::default();
    let osc = AdaptiveOscillator::new(p).unwrap();
    let train = drop_pulses(&gen_periodic(target, 20, 1.0, 0.0).unwrap(), &[4, 5]).unwrap();
    let trace = entrain(&osc, &train, dt(&p), train.last_time().unwrap()).unwrap();
    let final_period = trace.final_period().unwrap();
    let all_reset = trace.resets.len() == train.len();
    let close = (final_period - target).abs() < 0.05 * target;
    report.check(
        "3",
        "missing-pulse robustness",
        all_reset && close,
        format!("{}/{} pulses reset, final period {final_period:.5}", trace.resets.len(), train.len()),
    );
}

fn decay_after_input(report: &mut Report) {
    let p = OscillatorParams { decay_rate: 0.05, ..OscillatorParams::default() };
    let osc = AdaptiveOscillator::new(p).unwrap();
    let train = gen_periodic(0.8, 12, 1.0, 0.0).unwrap();
    let last = train.last_time().unwrap();
    let trace = entrain(&osc, &train, dt(&p), last + 60.0 * 0.8).unwrap();
    let free: Vec<_> = trace.samples.iter().filter(|s| s.t >= last).collect();
    let initial = (free[0].period - p.resting_period).abs();
    // offset at the end of each free cycle
    let offsets: Vec<f64> = free
        .windows(2)
        .filter(|w| w[1].phase < w[0].phase)
        .map(|w| (w[1].period - p.resting_period).abs())
        .collect();
    let monotone = offsets.windows(2).all(|w| w[1] <= w[0]) && offsets.first().is_some_and(|&o| o <= initial);
    let below = offsets.iter().position(|&o| o < 0.1 * initial);
    report.check(
        "4",
        "decay to rest",
        initial > 0.0 && monotone && below.is_some_and(|k| k < 50),
        format!("initial offset {initial:.4}, monotone {monotone}, below 10% after cycle {:?}", below.map(|k| k + 1)),
    );
}

fn beat_extraction(report: &mut Report) {
    let params = SyllableParams::default();
    let audio = gen_syllable_wav(&params).unwrap();
    let cfg = BeatConfig::default();
    let beats = extract_beats(&audio, &cfg).unwrap().times();
    let quiet = extract_beats(&audio.scaled(0.25), &cfg).unwrap().times();
    let intervals: Vec<f64> = beats.windows(2).map(|w| w[1] - w[0]).collect();
    let spacing = intervals.iter().all(|i| (i - 0.3).abs() <= 0.03);
    let sample = 1.0 / f64::from(audio.sample_rate);
    let invariant = quiet.len() == beats.len() && quiet.iter().zip(&beats).all(|(a, b)| (a - b).abs() <= sample);
    let ms: Vec<String> = intervals.iter().map(|i| format!("{:.1}", i * 1e3)).collect();
    report.check(
        "5",
        "beat extraction",
        beats.len() == 5 && spacing && invariant,
        format!("{} beats, intervals [{}] ms, scaled copy identical: {invariant}", beats.len(), ms.join(", ")),
    );
}

fn phase_modes(report: &mut Report) {
    let truth = [1.0 / 3.0, 0.5, 2.0 / 3.0];
    let phases = gen_phase_mixture(&truth, 0.03, 300, 0).unwrap();
    let r = mode_report(&phases, DEFAULT_BANDWIDTH).unwrap();
    let locs: Vec<f64> = r.modes.iter().map(|m| m.location).collect();
    let recovered = locs.len() == 3 && locs.iter().zip(truth).all(|(l, t)| (l - t).abs() <= 0.02);
    report.check("6a", "phase-mode regeneration", recovered, format!("modes {locs:.3?}"));

    // modes observed in the phrase-repetition task against metrical slots
    let observed = [0.36, 0.49, 0.6];
    let nominal = [nominal_phases(3, 2).unwrap(), nominal_phases(2, 2).unwrap(), nominal_phases(3, 3).unwrap()];
    let deviations: Vec<f64> = observed.iter().zip(nominal).map(|(o, n)| (o - n).abs()).collect();
    report.check(
        "6b",
        "observed modes near nominal phases",
        deviations.iter().all(|&d| d <= 0.04),
        format!("nominal {nominal:.3?}, deviations {deviations:.3?}, limit 0.04"),
    );
}

fn mora_linearity(report: &mut Report) {
    let exact = MoraDatasetParams { compensation: 1.0, noise_sd: 0.0, max_moras: 7, ..MoraDatasetParams::default() };
    let fit = mora_regression(&gen_mora_dataset(&exact).unwrap()).unwrap();
    let exact_ok = (fit.slope - exact.mean_mora).abs() <= 1e-12 && (fit.r_squared - 1.0).abs() <= 1e-12;

    let d = 0.15;
    let good = (0..100u64)
        .filter(|&seed| {
            let p = MoraDatasetParams { mean_mora: d, compensation: 0.8, mora_sd: 0.3 * d, noise_sd: 0.0, seed, ..MoraDatasetParams::default() };
            let fit = mora_regression(&gen_mora_dataset(&p).unwrap()).unwrap();
            (fit.slope - d).abs() <= 0.1 * d && fit.r_squared > 0.95
        })
        .count();
    report.check(
        "7",
        "mora linearity",
        exact_ok && good >= 95,
        format!("exact slope {:.15} r2 {:.15}; noisy {good}/100 within 10% with r2 > 0.95", fit.slope, fit.r_squared),
    );
}

fn meter_recovery(report: &mut Report) {
    let cfg = MeterConfig::default();
    let mut cases: Vec<(usize, f64, usize)> = Vec::new();
    for k in [2, 3, 4] {
        for beat in [0.3, 0.4, 0.5] {
            cases.push((k, beat, 0));
        }
    }
    cases.extend([(3, 0.4, 1), (3, 0.4, 2), (3, 0.5, 2)]);
    let mut wrong = Vec::new();
    for &(k, beat, rotation) in &cases {
        let train = gen_hierarchical_rotated(beat, k, 1.0, 0.5, 12, rotation).unwrap();
        let ok = detect_meter(&train, &cfg).unwrap().estimate().is_some_and(|m| {
            let slot = m.downbeat_time / beat;
            m.beats_per_measure as usize == k
                && (slot - slot.round()).abs() < 1e-6
                && slot.round() as usize % k == rotation
        });
        if !ok {
            wrong.push((k, beat, rotation));
        }
    }
    let mut false_meters = Vec::new();
    for strong_prob in [1.0 / 3.0, 0.5] {
        let n = (0..100u64)
            .filter(|&seed| {
                let train = gen_poisson(0.4, 36, strong_prob, 1.0, 0.5, 0.0, seed).unwrap();
                detect_meter(&train, &cfg).unwrap().estimate().is_some_and(|m| m.harmonicity_error <= 0.05)
            })
            .count();
        false_meters.push(n);
    }
    report.check(
        "8",
        "meter recovery",
        wrong.is_empty() && false_meters.iter().all(|&n| n < 10),
        format!("{}/{} grid cases correct; random trains with meter: {false_meters:?} of 100", cases.len() - wrong.len(), cases.len()),
    );
}

fn flip(j: TempoJudgement) -> TempoJudgement {
    match j {
        TempoJudgement::Faster => TempoJudgement::Slower,
        TempoJudgement::Slower => TempoJudgement::Faster,
        TempoJudgement::Equal => TempoJudgement::Equal,
    }
}

fn tempo_discrimination(report: &mut Report) {
    let series = |p: f64| gen_periodic(p, 5, 1.0, 0.0).unwrap();
    let judge = |a: &PulseTrain, b: &PulseTrain, reset: bool| {
        let cfg = TempoConfig { reset_per_series: reset, ..TempoConfig::default() };
        simulate_tempo_discrimination(a, b, &cfg).unwrap().judgement
    };
    let rest = TempoConfig::default().oscillator.resting_period;
    let changes = [(0.8, TempoJudgement::Faster), (1.2, TempoJudgement::Slower), (0.99, TempoJudgement::Equal), (1.01, TempoJudgement::Equal)];
    let (mut total, mut correct, mut asym) = (0, 0, 0);
    // a carried oscillator is still converging after five pulses off its resting
    // period, so 1% changes are only gated where the first series sits at rest
    let mut drifting = Vec::new();
    for base in [0.4, 0.5, 0.6] {
        for (factor, expect) in changes {
            let (a, b) = (series(base), series(base * factor));
            for reset in [false, true] {
                let got = judge(&a, &b, reset);
                if !reset && expect == TempoJudgement::Equal && base != rest {
                    drifting.push(format!("{base}x{factor}: {got:?}"));
                    continue;
                }
                total += 1;
                if got == expect {
                    correct += 1;
                }
            }
            if judge(&b, &a, true) != flip(judge(&a, &b, true)) {
                asym += 1;
            }
        }
    }
    report.check(
        "9",
        "tempo discrimination",
        correct == total && asym == 0,
        format!("{correct}/{total} judgements correct, {asym} asymmetric swaps; carried off-rest 1% (ungated) [{}]", drifting.join(", ")),
    );
}

fn run_twice(bin: &Path, dir: &Path, args: &[&str], files: &[&str]) -> Result<bool, String> {
    let once = || -> Result<Vec<Vec<u8>>, String> {
        let out = Command::new(bin).args(args).current_dir(dir).output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)));
        }
        let mut blobs = vec![out.stdout];
        for f in files {
            blobs.push(std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}"))?);
        }
        Ok(blobs)
    };
    Ok(once()? == once()?)
}

fn cli_determinism(report: &mut Report) {
    let Some(bin) = rhythm_binary() else {
        report.check("10", "CLI determinism", false, "rhythm binary not found; build it or set RHYTHM_BIN");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let runs: &[(&[&str], &[&str])] = &[
        (&["--seed", "7", "stimgen", "periodic", "--period", "0.6", "--drop", "4,5", "--out", "periodic.csv"], &["periodic.csv", "periodic.csv.json"]),
        (&["--seed", "7", "stimgen", "jittered", "--out", "jittered.csv"], &["jittered.csv", "jittered.csv.json"]),
        (&["--seed", "7", "stimgen", "hierarchical", "--out", "hier.csv"], &["hier.csv", "hier.csv.json"]),
        (&["--seed", "7", "stimgen", "poisson", "--out", "poisson.csv"], &["poisson.csv", "poisson.csv.json"]),
        (&["--seed", "7", "stimgen", "take-cards"], &[]),
        (&["--seed", "7", "stimgen", "mora", "--out", "mora.csv"], &["mora.csv", "mora.csv.json"]),
        (&["--seed", "7", "stimgen", "syllables", "--out", "syl.wav"], &["syl.wav", "syl.wav.json"]),
        (&["--seed", "7", "entrain", "jittered.csv"], &[]),
        (&["--seed", "7", "beats", "syl.wav", "--out", "beats.csv"], &["beats.csv", "beats.csv.json"]),
        (&["--seed", "7", "phases", "beats.csv", "anchors.csv", "--phases-csv", "phases.csv"], &["phases.csv"]),
        (&["--seed", "7", "meter", "hier.csv"], &[]),
        (&["--seed", "7", "mora", "mora.csv"], &[]),
        (&["--seed", "7", "discriminate", "periodic.csv", "jittered.csv"], &[]),
    ];
    std::fs::write(d.join("anchors.csv"), "time_s\n0.0\n0.6\n1.2\n1.8\n").unwrap();
    let mut differing = Vec::new();
    let mut errors = Vec::new();
    for (args, files) in runs {
        match run_twice(&bin, d, args, files) {
            Ok(true) => {}
            Ok(false) => differing.push(args.join(" ")),
            Err(e) => errors.push(e),
        }
    }
    report.check(
        "10",
        "CLI determinism",
        differing.is_empty() && errors.is_empty(),
        format!("{} commands run twice; differing {differing:?}; errors {errors:?}", runs.len()),
    );
}

fn main() -> ExitCode {
    let mut report = Report::default();
    entrainment_convergence(&mut report);
    jitter_smoothing(&mut report);
    missing_pulses(&mut report);
    decay_after_input(&mut report);
    beat_extraction(&mut report);
    phase_modes(&mut report);
    mora_linearity(&mut report);
    meter_recovery(&mut report);
    tempo_discrimination(&mut report);
    cli_determinism(&mut report);
    if report.failed().is_empty() {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {:?}", report.failed());
        ExitCode::FAILURE
    }
}
