//! One test per acceptance criterion. Each prints a single PASS/FAIL line before
//! asserting. Criteria 1, 6 and 7 run for several minutes on one core.

use hyperlock::experiment::collapse_run;
use hyperlock::{presets, run_experiment, ExperimentKind, ExperimentReport, ExperimentSpec};
use hyperlock_core::analysis::{
    benettin, morlet_cwt, period_scales, run_until_sync, scale_for_frequency, CollapseOptions,
    LyapunovOptions, DEFAULT_OMEGA0, DEFAULT_SYNC_HOLD, DEFAULT_SYNC_THRESHOLD,
};
use hyperlock_core::attacks::{
    key_space_cardinality, nmse, sync_fragility_study, FragilityOptions, KeySpaceStage, NmseConfig,
};
use hyperlock_core::cipher::{extract_keystream, run_protocol, vernam, Keystream, ProtocolLimits, Stage};
use hyperlock_core::config::SystemConfig;
use hyperlock_core::dynamics::{
    delay_steps_for_ms, integrate, rk4_step, ChannelDelay, IntegratorConfig, Var,
};
use hyperlock_core::rng::trial_rng;
use num_bigint::BigUint;
use rand::Rng;

const SEED: u64 = 20_160_301;

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n} [{name}] {tag}: {detail}");
}

fn preset(name: &str) -> SystemConfig {
    presets::find(name).and_then(|p| p.system).expect("full preset")
}

fn study(kind: ExperimentKind, trials: usize, overrides: &[(&str, &str)]) -> ExperimentReport {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = ExperimentSpec::new(kind, trials, SEED, dir.path()).unwrap();
    for (k, v) in overrides {
        spec = spec.with_override(k, *v).unwrap();
    }
    let r = run_experiment(&spec).unwrap();
    for f in &r.files {
        assert!(f.exists(), "{} missing", f.display());
    }
    r
}

#[test]
fn criterion_01_throughput() {
    let r = study(ExperimentKind::Throughput, 1000, &[]);
    let mean = r.value("mean").unwrap();
    let orbits = r.value("orbits").unwrap();
    let pass = (5e-4..=4e-3).contains(&mean) && orbits == 1000.0;
    verdict(
        1,
        "throughput",
        pass,
        format!("mean {:.4}% over {orbits} screened orbits of 1e5 samples, band [0.05%, 0.4%]", mean * 100.0),
    );
    assert!(pass);
}

#[test]
fn criterion_02_protocol() {
    let s = preset("fig4");
    let plaintext: Vec<u8> = {
        let mut rng = trial_rng(SEED, 2);
        (0..1024).map(|_| rng.gen()).collect()
    };
    let limits = ProtocolLimits {
        free_run_steps: usize::MAX,
        target_bits: Some(8 * plaintext.len()),
        ..ProtocolLimits::default()
    };
    let session = run_protocol(&s, &s, ChannelDelay::NONE, &limits);
    let (ka, kb) = (session.alice_keystream.clone(), session.bob_keystream.clone());
    let matched = matches!((&ka, &kb), (Some(a), Some(b)) if a.bits == b.bits);
    let round_trip = match (&ka, &kb) {
        (Some(a), Some(b)) => {
            let c = vernam(&plaintext, a).unwrap();
            c != plaintext && vernam(&c, b).unwrap() == plaintext
        }
        _ => false,
    };
    let pass = session.stage == Stage::Ciphering && matched && round_trip;
    verdict(
        2,
        "protocol",
        pass,
        format!(
            "stage {:?}, keystreams equal {matched}, {} bits after {} free-run steps, 1 KiB round trip {round_trip}",
            session.stage,
            ka.as_ref().map_or(0, Keystream::len),
            session.free_run_steps
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_sync_fragility() {
    let s = preset("fig2");
    let report = sync_fragility_study(&s, 100, SEED, &FragilityOptions::default());
    let b = preset("fig3b");
    let v3b = run_until_sync(
        &b.init(),
        &b.params,
        &b.coupling,
        b.step_h,
        ChannelDelay::NONE,
        DEFAULT_SYNC_THRESHOLD,
        DEFAULT_SYNC_HOLD,
        FragilityOptions::default().max_steps,
    );
    let pass = (0.10..=0.60).contains(&report.rate) && !v3b.synchronized;
    verdict(
        3,
        "sync fragility",
        pass,
        format!(
            "failure rate {:.2} over 100 redraws (band [0.10, 0.60]); Fig. 3(b) synchronized {}",
            report.rate, v3b.synchronized
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_delay_pathology() {
    let mut s = preset("fig4");
    s.delay_ms = 10.0;
    let d = delay_steps_for_ms(s.delay_ms, s.step_h);
    let n = 200_000;
    let v = run_until_sync(
        &s.init(),
        &s.params,
        &s.coupling,
        s.step_h,
        s.channel_delay(),
        DEFAULT_SYNC_THRESHOLD,
        DEFAULT_SYNC_HOLD,
        n,
    );
    let cfg = IntegratorConfig::new(s.step_h, n).unwrap();
    let orbit = integrate(&s.init(), &s.params, &s.coupling, &cfg, s.channel_delay(), &[Var::XA]);
    let var = match &orbit {
        Ok(o) => {
            let x = o.get(Var::XA).unwrap();
            let tail = &x[x.len() - x.len() / 10..];
            let m = tail.iter().sum::<f64>() / tail.len() as f64;
            tail.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / tail.len() as f64
        }
        Err(_) => f64::NAN,
    };
    let pass = !v.synchronized && var < 1e-6;
    verdict(
        4,
        "delay pathology",
        pass,
        format!(
            "delay {d} step(s); synchronized {}; var(x_A) over the last 10% of {n} steps = {var:.3e} (needs < 1e-6)",
            v.synchronized
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_05_bisearch() {
    let r = study(ExperimentKind::BiSearch, 20, &[]);
    let frac = r.value("frac_le_1e-8").unwrap();
    let pass = frac >= 0.70 && r.failed_trials == 0;
    verdict(
        5,
        "bisearch",
        pass,
        format!(
            "{:.0}% of 20 trials within 1e-8 (needs >= 70%); median error {:.3e}; not-unimodal {}",
            frac * 100.0,
            r.value("median_error").unwrap(),
            r.value("not_unimodal").unwrap()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_pipeline() {
    let r = study(ExperimentKind::Table1Pipeline, 30, &[]);
    let (x, y, e) = (
        r.value("median_error_x_A0").unwrap(),
        r.value("median_error_y_A0").unwrap(),
        r.value("median_error_eps_x").unwrap(),
    );
    let pass = x <= 1e-3 && y <= 1e-3 && e <= 1e-2 && r.failed_trials == 0;
    verdict(
        6,
        "grid + pattern search",
        pass,
        format!("median errors x_A0 {x:.3e}, y_A0 {y:.3e} (<= 1e-3), eps_x {e:.3e} (<= 1e-2) over 30 configs"),
    );
    assert!(pass);
}

#[test]
fn criterion_07_weak_key_gradient() {
    let r = study(ExperimentKind::Fig8Gradient, 200, &[]);
    let rate = r.value("complete_recovery_rate").unwrap();
    let hist = r.files.iter().any(|f| f.ends_with("histograms.csv"));
    let pass = rate >= 0.10 && hist && r.failed_trials == 0;
    verdict(
        7,
        "weak-key gradient",
        pass,
        format!("complete recovery {:.1}% of 200 setups at 11 digits (needs >= 10%); histograms exported {hist}", rate * 100.0),
    );
    assert!(pass);
}

#[test]
fn criterion_08_key_space() {
    let want = [
        (KeySpaceStage::Naive, 110u32),
        (KeySpaceStage::AfterPublicICs, 88),
        (KeySpaceStage::OneSideOnly, 44),
        (KeySpaceStage::AfterWEstimate, 35),
    ];
    let got: Vec<bool> = want
        .iter()
        .map(|(s, k)| key_space_cardinality(*s, 11).cardinality == BigUint::from(10u32).pow(*k))
        .collect();
    let pass = got.iter().all(|g| *g);
    verdict(8, "key space", pass, format!("10^110, 10^88, 10^44, 10^35 exact: {got:?}"));
    assert!(pass);
}

#[test]
fn criterion_09_oracles() {
    // Diagonal linear system: exponents are the diagonal.
    let lambda = [0.3, -0.1, -0.7];
    let sp = benettin(
        [0.0; 3],
        0.01,
        20_000,
        &LyapunovOptions::default(),
        1e6,
        move |v: &[f64; 3]| std::array::from_fn(|i| lambda[i] * v[i]),
        move |_: &[f64; 3], v: &[f64; 3]| std::array::from_fn(|i| lambda[i] * v[i]),
    )
    .unwrap();
    let lyap = sp.exponents.iter().zip(lambda).all(|(e, l)| (e - l).abs() <= 1e-6);

    // RK4 on x' = -x over [0, 1]: halving the step divides the error by about 16.
    let err = |n: usize| {
        let mut s = [1.0];
        for _ in 0..n {
            s = rk4_step(&s, 1.0 / n as f64, |v| [-v[0]]);
        }
        (s[0] - (-1.0f64).exp()).abs()
    };
    let ratio = err(10) / err(20);
    let rk4 = (ratio - 16.0).abs() < 1.0;

    // NMSE identities.
    let z: Vec<f64> = (0..=400).map(|i| 0.5 + (i as f64 * 0.03).sin() * 0.3).collect();
    let c = NmseConfig::default().with_horizon(4.0);
    let twice: Vec<f64> = z.iter().map(|v| 2.0 * v).collect();
    let zero = vec![0.0; z.len()];
    let vals = [
        nmse(&z, &z, 0.01, &c).unwrap().value,
        nmse(&z, &twice, 0.01, &c).unwrap().value,
        nmse(&z, &zero, 0.01, &c).unwrap().value,
    ];
    let nmse_ok = vals[0] == 0.0 && (vals[1] - 1.0).abs() < 1e-12 && (vals[2] - 1.0).abs() < 1e-12;

    // CWT ridge of a 1 Hz tone.
    let h = 0.01;
    let tone: Vec<f64> = (0..8192).map(|i| (2.0 * std::f64::consts::PI * i as f64 * h).sin()).collect();
    let scales = period_scales(0.25, 4.0, 8, DEFAULT_OMEGA0);
    let sg = morlet_cwt(&tone, &scales, h).unwrap();
    let target = scale_for_frequency(1.0, DEFAULT_OMEGA0);
    let want = (0..scales.len())
        .min_by(|&a, &b| (scales[a] - target).abs().total_cmp(&(scales[b] - target).abs()))
        .unwrap();
    let mid = sg.times.len() / 2;
    let cwt_ok = sg.ridge(mid).abs_diff(want) <= 1;

    // Vernam involution and keystream length on random inputs.
    let mut rng = trial_rng(SEED, 9);
    let mut cipher_ok = true;
    for _ in 0..200 {
        let n_min = rng.gen_range(3..400usize);
        // Alternating series with a chosen number of interior minima.
        let series: Vec<f64> = (0..2 * n_min + 1)
            .map(|i| if i % 2 == 0 { 1.0 } else { rng.gen_range(-1.0..0.9) })
            .collect();
        let d = rng.gen_range(1..12usize);
        let ks = extract_keystream(&series, d, Var::ZA).unwrap();
        cipher_ok &= ks.len() == n_min.div_ceil(d);
        let data: Vec<u8> = (0..ks.len() / 8).map(|_| rng.gen()).collect();
        cipher_ok &= vernam(&vernam(&data, &ks).unwrap(), &ks).unwrap() == data;
    }

    let pass = lyap && rk4 && nmse_ok && cwt_ok && cipher_ok;
    verdict(
        9,
        "oracles",
        pass,
        format!(
            "lyapunov {lyap} {:?}; rk4 ratio {ratio:.2}; nmse {vals:?}; cwt ridge {cwt_ok}; vernam/keystream {cipher_ok}",
            sp.exponents
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_collapse() {
    let s = preset("fig2");
    let n = 1_000_000;
    let out = collapse_run(&s, n, 20_000, &CollapseOptions::new(s.step_h), 100_000).unwrap();
    let lle = out.post_collapse_lle.unwrap_or(f64::NAN);
    let pass = out.collapse_step.is_some_and(|k| k < n) && lle <= 1e-2;
    verdict(
        10,
        "chaos collapse",
        pass,
        format!(
            "collapse at {:?} of {n} steps; post-collapse largest exponent {lle:.4} (needs <= 0 within 1e-2)",
            out.collapse_step
        ),
    );
    assert!(pass);
}
