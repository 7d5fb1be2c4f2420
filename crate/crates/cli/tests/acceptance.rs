//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::fs;
use std::time::Instant;

use mmsim_cli::run;
use mmsim_core::beamforming::{calibration, equalizer, precoder, FilterKind};
use mmsim_core::capture::{capture_gain_stats, read_capture, selection_gain_range};
use mmsim_core::channel::{
    complex_gaussian, compose_dl, compose_ul, stream_rng, synth_capture, AntennaKind, BeamLobe,
    CaptureRecord, HardwareResponse, SPEED_OF_LIGHT,
};
use mmsim_core::linkbudget::{theoretical_pl, CARRIER_FREQUENCY_HZ, DEFAULT_DISTANCES_M};
use mmsim_core::numerics::ComplexMatrix;
use mmsim_core::scenario::{
    median, median_gain, run_scenario, run_scenario_detailed, EqualizerChoice, OfdmNumerology,
    ScenarioConfig, ThroughputTrace, Trajectory, UeConfig,
};
use mmsim_core::selection::{
    init_state, step_frame, FrameInput, FrameSchedule, SelectionMode, SelectionState, NUM_PORTS,
};
use num_complex::Complex64;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["mmsim"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).expect("utf-8 output"))
}

fn value_of<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('='))
}

fn ac1_delay_budget() -> Outcome {
    let (code, out) = cli(&["selection", "check-delays"]);
    let frecon = value_of(&out, "frecon_ns");
    let fem = value_of(&out, "fem_ns");
    let fv = value_of(&out, "frecon_verdict");
    let mv = value_of(&out, "fem_verdict");
    let guard = value_of(&out, "guard_ns");
    let pass = code == 0
        && frecon == Some("120")
        && fem == Some("385")
        && fv == Some("fits")
        && mv == Some("fits")
        && guard == Some("71900");
    outcome(
        pass,
        format!(
            "frecon_ns={} fem_ns={} verdicts={}/{} guard_ns={}",
            frecon.unwrap_or("-"),
            fem.unwrap_or("-"),
            fv.unwrap_or("-"),
            mv.unwrap_or("-"),
            guard.unwrap_or("-")
        ),
    )
}

fn ac2_fspl() -> Outcome {
    let f = CARRIER_FREQUENCY_HZ;
    let mut worst: f64 = 0.0;
    for &d in &DEFAULT_DISTANCES_M {
        for (gt, gr) in [(0.0, 0.0), (7.5, 5.0), (10.0, 5.0)] {
            // natural-log form of 20 log10(4 pi d f / c) - Gt - Gr
            let hand = 20.0 / std::f64::consts::LN_10
                * ((4.0 * PI).ln() + d.ln() + f.ln() - SPEED_OF_LIGHT.ln())
                - gt
                - gr;
            let got = theoretical_pl(d, f, gt, gr).expect("valid distance");
            worst = worst.max((got - hand).abs());
        }
    }
    let mut slope_ok = true;
    let mut slopes = Vec::new();
    for &d in &DEFAULT_DISTANCES_M {
        let s = theoretical_pl(10.0 * d, f, 0.0, 0.0).unwrap()
            - theoretical_pl(d, f, 0.0, 0.0).unwrap();
        slope_ok &= format!("{s:.3}") == "20.000" && (s - 20.0).abs() < 1e-9;
        slopes.push(s);
    }
    let max_slope_err = slopes.iter().map(|s| (s - 20.0).abs()).fold(0.0, f64::max);
    outcome(
        worst < 1e-9 && slope_ok,
        format!("max |PL - hand| = {worst:.2e} dB; slope = 20.000 dB/decade (max dev {max_slope_err:.1e})"),
    )
}

fn random_channel(seed: u64, m: usize, k: usize) -> ComplexMatrix {
    let mut rng = stream_rng(seed, 7);
    ComplexMatrix::from_fn(m, k, |_, _| complex_gaussian(&mut rng, 1.0))
}

fn ac3_zf_orthogonality() -> Outcome {
    let mut worst_off: f64 = 0.0;
    let mut worst_rzf: f64 = 0.0;
    for seed in 0..1000 {
        let h = random_channel(seed, 16, 2);
        let zf = equalizer(&h, FilterKind::Zf).expect("full rank");
        let fh = zf.matmul(&h).unwrap();
        worst_off = worst_off.max(fh[(0, 1)].norm()).max(fh[(1, 0)].norm());
        let rzf = equalizer(&h, FilterKind::Rzf { alpha: 1e-12 }).unwrap();
        worst_rzf = worst_rzf.max(rzf.sub(&zf).unwrap().max_abs());
    }
    outcome(
        worst_off < 1e-9 && worst_rzf < 1e-6,
        format!("max off-diag |F H| = {worst_off:.2e}; max |RZF - ZF| = {worst_rzf:.2e}"),
    )
}

fn ac4_calibration() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..1000 {
        let mut rng = stream_rng(seed, 8);
        let h_p = random_channel(seed, 16, 2);
        let bs = HardwareResponse::random(16, 3.0, &mut rng);
        let ue = HardwareResponse::random(2, 3.0, &mut rng);
        let h_ul = compose_ul(&h_p, &bs, &ue).unwrap();
        let h_dl = compose_dl(&h_p, &ue, &bs).unwrap();
        let c = calibration(&bs).unwrap();
        let f = precoder(&h_ul, &c, FilterKind::Zf).unwrap();
        let eff = h_dl.matmul(&f).unwrap();
        let diag = eff[(0, 0)].norm_sqr() + eff[(1, 1)].norm_sqr();
        let off = eff[(0, 1)].norm_sqr() + eff[(1, 0)].norm_sqr();
        worst = worst.max(off / diag);
    }
    outcome(
        worst < 1e-10,
        format!("max off/diag power = {worst:.2e} over 1000 trials"),
    )
}

/// First index holding the maximum, found by comparing against every entry.
fn brute_force_argmax(m: &[f64; NUM_PORTS]) -> usize {
    (0..NUM_PORTS)
        .find(|&i| (0..NUM_PORTS).all(|j| m[i] >= m[j]) && (0..i).all(|j| m[j] < m[i]))
        .expect("one maximum exists")
}

fn ac5_fsm_oracle() -> Outcome {
    let schedule = FrameSchedule::default();
    let mut rng = stream_rng(5, 0);
    let mut sweeps = 0u64;
    let mut mismatches = 0u64;
    let mut bad_visits = 0u64;
    let mut illegal = 0u64;
    for _ in 0..10_000 {
        let mut s: SelectionState = init_state();
        let n_sweeps = rng.random_range(1..4);
        let mut done = 0;
        let mut magnitudes = [0.0; NUM_PORTS];
        let mut visits = [0u32; NUM_PORTS];
        for _ in 0..10_000 {
            if done == n_sweeps {
                break;
            }
            let input = match s.mode {
                SelectionMode::BeamSweepPreSync => FrameInput {
                    sync_success: rng.random_bool(0.3),
                    per_port_magnitude: None,
                },
                SelectionMode::BeamSweepPostSync => {
                    if s.sweep_frame == 0 {
                        // quantized values so that ties occur
                        for v in &mut magnitudes {
                            *v = if rng.random_bool(0.3) {
                                rng.random_range(0..4) as f64
                            } else {
                                rng.random::<f64>() * 4.0
                            };
                        }
                        visits = [0; NUM_PORTS];
                    }
                    visits[s.rx_port] += 1;
                    FrameInput {
                        sync_success: true,
                        per_port_magnitude: Some(magnitudes),
                    }
                }
                _ => FrameInput::default(),
            };
            let next = step_frame(&s, &schedule, &input).expect("valid step");
            if !s.mode.can_transition_to(next.mode) || next.check_invariants().is_err() {
                illegal += 1;
            }
            if s.mode == SelectionMode::BeamSweepPostSync && next.mode == SelectionMode::Idle {
                sweeps += 1;
                done += 1;
                if next.tx_port != brute_force_argmax(&magnitudes) || next.rx_port != next.tx_port {
                    mismatches += 1;
                }
                if visits != [1; NUM_PORTS] {
                    bad_visits += 1;
                }
            }
            s = next;
        }
    }
    outcome(
        mismatches == 0 && bad_visits == 0 && illegal == 0 && sweeps >= 10_000,
        format!("{sweeps} sweeps: {mismatches} argmax mismatches, {bad_visits} bad visit patterns, {illegal} illegal transitions"),
    )
}

fn ac6_sweep_timing() -> Outcome {
    let schedule = FrameSchedule::default();
    let mut s = init_state();
    let mut sweep_frames = Vec::new();
    let mut current = 0usize;
    for _ in 0..200 {
        let input = FrameInput {
            sync_success: true,
            per_port_magnitude: Some([1.0, 3.0, 2.0, 0.5]),
        };
        if s.mode == SelectionMode::BeamSweepPostSync {
            current += 1;
        }
        let next = step_frame(&s, &schedule, &input).unwrap();
        if s.mode == SelectionMode::BeamSweepPostSync
            && next.mode != SelectionMode::BeamSweepPostSync
        {
            sweep_frames.push(current);
            current = 0;
        }
        s = next;
    }
    let num = OfdmNumerology::default();
    let sym = num.symbol_duration_us();
    let exact_sym = (2048.0 + 160.0) / 30.72e6 * 1e6;
    let guard_ok =
        schedule.check_symbol_duration(sym).is_ok() && ScenarioConfig::default().validate().is_ok();
    let frames_ok = !sweep_frames.is_empty() && sweep_frames.iter().all(|&n| n == 4);
    let ms = sweep_frames.first().copied().unwrap_or(0) as f64 * schedule.frame_duration_ms;
    let pass = frames_ok
        && ms == 40.0
        && schedule.sweep_duration_ms() == 40.0
        && sym == exact_sym
        && (sym - 71.875).abs() < 1e-9
        && guard_ok;
    outcome(
        pass,
        format!(
            "{} sweeps of {} frames = {ms} ms; symbol {sym} us; guard check {}",
            sweep_frames.len(),
            sweep_frames.first().copied().unwrap_or(0),
            if guard_ok { "ok" } else { "failed" }
        ),
    )
}

fn flat_ue(offsets: [f64; NUM_PORTS]) -> UeConfig {
    UeConfig {
        antenna: AntennaKind::PatchLike,
        trajectory: Trajectory::Horizontal {
            speed_kmh: 0.0,
            range_m: 5.0,
            extent_m: 0.0,
        },
        ports: Some(vec![BeamLobe::new(5.0, 0.0, 60.0); NUM_PORTS]),
        port_offsets_db: offsets,
        ..UeConfig::default()
    }
}

fn ac7_constructed_gain() -> Outcome {
    let offsets = [0.0, 0.0, 6.0, 0.0];
    let config = ScenarioConfig {
        ues: vec![flat_ue(offsets)],
        duration_s: 5.0,
        seed: 11,
        ..ScenarioConfig::default()
    };
    let rec = synth_capture(&config, 5.0, 1.0).expect("capture");
    let range = capture_gain_stats(&rec).map(|s| selection_gain_range(&s));
    let capture_gain = range.as_ref().map(|r| r.min_gain_db).unwrap_or(f64::NAN);
    let capture_ok = range
        .as_ref()
        .map(|r| (r.min_gain_db - 6.0).abs() <= 0.5 && (r.max_gain_db - 6.0).abs() <= 0.5)
        .unwrap_or(false);

    let with = run_scenario_detailed(&config).expect("scenario with selection");
    let without = run_scenario(&ScenarioConfig {
        selection_enabled: false,
        ..config.clone()
    })
    .expect("scenario without selection");
    let Some(update) = with.first_update_frame[0] else {
        return outcome(false, "no sweep completed");
    };
    let t0 = update as f64 * 0.01 + 1e-9;
    let after = |t: &ThroughputTrace| -> Vec<f64> {
        t.rows_for(0)
            .filter(|r| r.t_s >= t0)
            .map(|r| r.sinr_db)
            .collect()
    };
    let gain = median(&after(&with.trace)).unwrap_or(f64::NAN)
        - median(&after(&without)).unwrap_or(f64::NAN);
    let median_sinr = median(&after(&without)).unwrap_or(f64::NAN);
    outcome(
        capture_ok && (gain - 6.0).abs() <= 0.5,
        format!("capture selection gain {capture_gain:.3} dB; scenario median SINR gain {gain:.3} dB (baseline {median_sinr:.1} dB)"),
    )
}

fn rotation(kind: EqualizerChoice, seed: u64, selection: bool) -> ScenarioConfig {
    let mut c = ScenarioConfig {
        seed,
        selection_enabled: selection,
        ..ScenarioConfig::default()
    };
    c.equalizer.kind = kind;
    c
}

fn ac8_campaign() -> Outcome {
    const SEEDS: u64 = 20;
    let kinds = [EqualizerChoice::Mrc, EqualizerChoice::Zf];
    // (kind, seed) -> (with, without)
    let runs: Vec<(EqualizerChoice, u64, ThroughputTrace, ThroughputTrace)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = kinds
                .iter()
                .flat_map(|&k| (0..SEEDS).map(move |s| (k, s)))
                .map(|(k, s)| {
                    scope.spawn(move || {
                        let with = run_scenario(&rotation(k, s, true)).expect("run");
                        let without = run_scenario(&rotation(k, s, false)).expect("run");
                        (k, s, with, without)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("worker"))
                .collect()
        });

    let mut details = Vec::new();
    let mut pass = true;
    for kind in kinds {
        let of_kind: Vec<_> = runs.iter().filter(|r| r.0 == kind).collect();
        let pooled = |ue: usize, with: bool| -> Vec<f64> {
            of_kind
                .iter()
                .flat_map(|r| {
                    if with {
                        r.2.throughputs(ue)
                    } else {
                        r.3.throughputs(ue)
                    }
                })
                .collect()
        };
        for (ue, name) in [(0, "yagi"), (1, "patch")] {
            let per_seed: Vec<f64> = of_kind
                .iter()
                .map(|r| median_gain(&r.2, &r.3, ue).unwrap_or(f64::INFINITY))
                .collect();
            let min_seed = per_seed.iter().copied().fold(f64::INFINITY, f64::min);
            let pooled_gain =
                median(&pooled(ue, true)).unwrap() / median(&pooled(ue, false)).unwrap();
            let ok = min_seed > 1.0 && pooled_gain > 1.0;
            pass &= ok;
            details.push(format!(
                "(a) {kind:?} {name} gain {pooled_gain:.2} (min/seed {min_seed:.2})"
            ));
        }
        let yagi = median(&pooled(0, true)).unwrap();
        let patch = median(&pooled(1, true)).unwrap();
        match kind {
            EqualizerChoice::Mrc => {
                pass &= patch > yagi;
                details.push(format!("(b) MRC patch {patch:.2} vs yagi {yagi:.2} Mbit/s"));
            }
            _ => {
                let ratio = patch / yagi;
                pass &= (0.8..=1.25).contains(&ratio);
                details.push(format!("(c) ZF patch/yagi {ratio:.3}"));
            }
        }
    }
    outcome(pass, details.join("; "))
}

fn ac9_determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"duration_s": 2.0, "seed": 21}"#).unwrap();
    let mut identical = true;
    let mut files = 0;
    let outs = [dir.path().join("a"), dir.path().join("b")];
    for o in &outs {
        let (code, _) = cli(&[
            "simulate",
            cfg.to_str().unwrap(),
            "--out",
            o.to_str().unwrap(),
        ]);
        identical &= code == 0;
    }
    for entry in fs::read_dir(&outs[0]).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "manifest.json" {
            continue;
        }
        files += 1;
        identical &= fs::read(outs[0].join(&name)).ok() == fs::read(outs[1].join(&name)).ok();
    }

    let mut rng = stream_rng(9, 0);
    let mut lossless = 0;
    for i in 0..100u64 {
        let dims = [
            rng.random_range(1..5),
            rng.random_range(1..6),
            rng.random_range(1..9),
            4,
        ];
        let n = dims.iter().product();
        let snapshots: Vec<Complex64> = (0..n)
            .map(|_| {
                let mut v = || match rng.random_range(0..10) {
                    0 => -0.0,
                    1 => f64::MIN_POSITIVE / 3.0,
                    2 => f64::from_bits(rng.random::<u64>() & 0x7fef_ffff_ffff_ffff),
                    _ => (rng.random::<f64>() - 0.5) * 10f64.powi(rng.random_range(-15..3)),
                };
                Complex64::new(v(), v())
            })
            .collect();
        let rec = CaptureRecord {
            dims,
            subcarriers: (0..dims[1]).map(|f| f * 3 + 1).collect(),
            snapshots,
            frame_period_ms: 10.0,
            distance_m: rng.random_range(1.0..12.0),
            antenna_kind: if i % 2 == 0 {
                AntennaKind::YagiLike
            } else {
                AntennaKind::PatchLike
            },
            seed: rng.random(),
        };
        let mut buf = Vec::new();
        rec.export(&mut buf).unwrap();
        let Ok(back) = read_capture(buf.as_slice()) else {
            continue;
        };
        let bits_equal =
            back.dims == rec.dims
                && back.subcarriers == rec.subcarriers
                && back.distance_m.to_bits() == rec.distance_m.to_bits()
                && back.seed == rec.seed
                && back.antenna_kind == rec.antenna_kind
                && back.snapshots.iter().zip(&rec.snapshots).all(|(a, b)| {
                    a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()
                });
        if bits_equal {
            lossless += 1;
        }
    }
    outcome(
        identical && files > 0 && lossless == 100,
        format!("{files} output files byte-identical: {identical}; {lossless}/100 captures bit-lossless"),
    )
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("AC1", "delay budget", ac1_delay_budget),
        ("AC2", "theoretical FSPL", ac2_fspl),
        ("AC3", "ZF orthogonality", ac3_zf_orthogonality),
        ("AC4", "calibration closure", ac4_calibration),
        ("AC5", "selection FSM oracle", ac5_fsm_oracle),
        ("AC6", "sweep timing", ac6_sweep_timing),
        ("AC7", "constructed selection gain", ac7_constructed_gain),
        ("AC8", "rotation campaign", ac8_campaign),
        ("AC9", "determinism and round trip", ac9_determinism),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {id} {name}: {} ({secs:.2} s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of 9 acceptance criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
