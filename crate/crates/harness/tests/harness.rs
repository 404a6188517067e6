use std::fs;
use std::process::Command;
use std::time::Instant;

use hyperlock::error::HarnessError;
use hyperlock::output::{decade_histogram, emit_csv, orbit_rows};
use hyperlock::screen::{random_admitted, screening_limits};
use hyperlock::{presets, random_hyperchaotic_config, run_experiment, ExperimentKind, ExperimentSpec};
use hyperlock_core::analysis::{run_until_sync, DEFAULT_SYNC_HOLD, DEFAULT_SYNC_THRESHOLD};
use hyperlock_core::config::{emit_config, parse_config};
use hyperlock_core::dynamics::{integrate, ChannelDelay, IntegratorConfig, Var};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperlock"))
}

#[test]
fn same_spec_gives_identical_files() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let spec = ExperimentSpec::new(ExperimentKind::Throughput, 3, 11, dir.path())
            .unwrap()
            .with_override("orbit_len", "5000")
            .unwrap();
        let r = run_experiment(&spec).unwrap();
        let read = |name: &str| fs::read(dir.path().join("throughput").join(name)).unwrap();
        (r.summary, read("summary.csv"), read("trials.csv"))
    };
    let a = run();
    let b = run();
    assert_eq!(a, b);
    let text = String::from_utf8(a.1).unwrap();
    assert!(text.contains("# rng = "));
    assert!(text.contains("# orbit_len = 5000"));
    assert!(text.contains("# seed = 11"));
}

#[test]
fn every_file_carries_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec::new(ExperimentKind::SyncFragility, 4, 3, dir.path()).unwrap();
    let r = run_experiment(&spec).unwrap();
    assert_eq!(r.files.len(), 3);
    for f in &r.files {
        let text = fs::read_to_string(f).unwrap();
        assert!(text.contains("# base.a = "), "{}", f.display());
        assert!(text.contains("# base.config_hash = "));
        assert!(text.contains("# threshold = 1e-6"));
    }
    assert!(r.value("failure_rate").is_some());
}

#[test]
fn unknown_override_is_rejected() {
    let spec = ExperimentSpec::new(ExperimentKind::BiSearch, 1, 0, "unused").unwrap();
    let err = spec.with_override("epsilon_q", "1").unwrap_err();
    assert!(matches!(err, HarnessError::UnknownOverride { .. }));
}

#[test]
fn screened_config_is_reproducible_and_admissible() {
    let a = random_hyperchaotic_config(5, 100).unwrap();
    let b = random_hyperchaotic_config(5, 100).unwrap();
    assert_eq!(a.config, b.config);
    assert_eq!(a.attempts, b.attempts);

    let sp = a.session.spectrum.as_ref().unwrap();
    assert_eq!(sp.exponents.iter().filter(|e| **e > 1e-2).count(), 2);
    let c = a.config;
    let v = run_until_sync(
        &c.init(),
        &c.params,
        &c.coupling,
        c.step_h,
        ChannelDelay::NONE,
        DEFAULT_SYNC_THRESHOLD,
        DEFAULT_SYNC_HOLD,
        1_000_000,
    );
    assert!(v.synchronized);
}

#[test]
fn exhausted_attempts_is_an_error() {
    let fig3b = presets::find("fig3b").unwrap().system.unwrap();
    let r = random_admitted(1, 2, &screening_limits(), |_| fig3b);
    assert!(matches!(r, Err(HarnessError::ExhaustedAttempts { attempts: 2 })));
}

#[test]
fn attempt_counts_over_fifty_seeds() {
    let t = Instant::now();
    let counts: Vec<usize> = (0..50)
        .map(|s| random_hyperchaotic_config(s, 200).unwrap().attempts)
        .collect();
    let max = *counts.iter().max().unwrap();
    let mut hist = vec![0; max + 1];
    for c in &counts {
        hist[*c] += 1;
    }
    println!("attempt histogram {hist:?}, {:.1} s", t.elapsed().as_secs_f64());
    assert!(counts.iter().all(|c| *c >= 1));
}

#[test]
fn fig2_config_round_trips() {
    let s = presets::find("fig2").unwrap().system.unwrap();
    assert_eq!(parse_config(&emit_config(&s)).unwrap(), s);
}

#[test]
fn orbit_csv_has_step_column_and_exact_values() {
    let s = presets::find("fig4").unwrap().system.unwrap();
    let cfg = IntegratorConfig::new(0.01, 50).unwrap();
    let o = integrate(&s.init(), &s.params, &s.coupling, &cfg, ChannelDelay::NONE, &[Var::XA, Var::ZB]).unwrap();
    let (header, rows) = orbit_rows(&o);
    assert_eq!(header, ["step", "x_A", "z_B"]);
    assert_eq!(rows.len(), 51);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("orbit.csv");
    emit_csv(&path, &[], &header, &rows).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let last = text.lines().last().unwrap();
    let cols: Vec<&str> = last.split(',').collect();
    assert_eq!(cols[0], "50");
    assert_eq!(cols[1].parse::<f64>().unwrap(), o.get(Var::XA).unwrap()[50]);
    assert_eq!(cols[2].parse::<f64>().unwrap(), o.get(Var::ZB).unwrap()[50]);
}

#[test]
fn histogram_counts_everything_finite() {
    let errs = [1e-20, 3e-11, 2e-3, 0.5, 7.0];
    let h = decade_histogram(&errs, -16, 0);
    assert_eq!(h.iter().map(|(_, c)| c).sum::<usize>(), errs.len());
}

#[test]
fn cli_exit_codes() {
    let ok = bin().args(["presets", "list"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("fig4"));

    let usage = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(1));

    let bad = bin()
        .args(["study", "throughput", "--set", "epsilon_q=1"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));

    let failed = bin()
        .args(["protocol", "--alice", "fig3b", "--bob", "fig3b", "--n-steps", "1000"])
        .output()
        .unwrap();
    assert_eq!(failed.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&failed.stdout).contains("no-sync"));
}

#[test]
fn cli_simulate_writes_orbit() {
    let out = bin()
        .args(["simulate", "--config", "fig4", "--n-steps", "10", "--vars", "x_A,x_B"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "step,x_A,x_B");
    assert_eq!(body.len(), 12);
}

#[test]
fn cli_reads_config_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig7.conf");
    fs::write(&path, emit_config(&presets::find("fig7").unwrap().system.unwrap())).unwrap();
    let out = bin()
        .args(["attack", "bisearch", "--config", path.to_str().unwrap(), "--record-steps", "400", "--trials", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 3);

    fs::write(&path, "a = -1\nepsilon_q = 2\n").unwrap();
    let bad = bin()
        .args(["simulate", "--config", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("line 2"));
}
