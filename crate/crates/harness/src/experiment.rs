//! Seeded batch studies. Trial `i` of a run with seed `s` draws everything from
//! stream `i` of `s`, so results do not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore};
use rayon::prelude::*;

use hyperlock_core::analysis::{
    concentration_profile, detect_collapse, lyapunov_spectrum_with, throughput, CollapseOptions,
    LyapunovOptions,
};
use hyperlock_core::attacks::{
    bisearch_w, run_pipeline, sync_fragility_study, EstimationReport, EveConfig, FragilityOptions,
    GradientOptions, GridBounds, NmseConfig, NmseObjective, Observation, PatternOptions,
    PipelineOptions, Refiner,
};
use hyperlock_core::cipher::{run_protocol, ProtocolLimits, Stage};
use hyperlock_core::config::{sample_system, SystemConfig};
use hyperlock_core::dynamics::{
    integrate, ChannelDelay, ControlParams, CoupledState, IntegratorConfig, Var,
};
use hyperlock_core::rng::{trial_rng, RNG_NAME};

use crate::error::{HarnessError, Result};
use crate::output::{config_metadata, decade_histogram, emit_csv, num, Metadata};
use crate::presets;
use crate::screen::{random_admitted, screening_limits, Screened};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExperimentKind {
    Throughput,
    SyncFragility,
    BiSearch,
    Table1Pipeline,
    Fig8Gradient,
    Collapse,
    Protocol,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::Throughput,
        Self::SyncFragility,
        Self::BiSearch,
        Self::Table1Pipeline,
        Self::Fig8Gradient,
        Self::Collapse,
        Self::Protocol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Throughput => "throughput",
            Self::SyncFragility => "sync-fragility",
            Self::BiSearch => "bisearch",
            Self::Table1Pipeline => "table1",
            Self::Fig8Gradient => "fig8",
            Self::Collapse => "collapse",
            Self::Protocol => "protocol",
        }
    }

    /// Tunable keys and their defaults.
    pub fn defaults(self) -> Vec<(&'static str, &'static str)> {
        let pipeline = [
            ("m", "20"),
            ("n", "20"),
            ("short_steps", "400"),
            ("long_steps", "3200"),
            ("top_k", "5"),
            ("use_bisearch", "true"),
            ("bisearch_iters", "60"),
        ];
        let mut d = vec![("step_h", "0.01")];
        match self {
            Self::Throughput => d.extend([("orbit_len", "100000"), ("max_attempts", "200")]),
            Self::SyncFragility => d.extend([
                ("preset", "fig2"),
                ("threshold", "1e-6"),
                ("hold", "1000"),
                ("max_steps", "200000"),
            ]),
            Self::BiSearch => d.extend([
                ("steps", "400"),
                ("iters", "60"),
                ("bracket_lo", "-0.5"),
                ("bracket_hi", "0.5"),
                ("context", "random"),
                ("max_attempts", "200"),
            ]),
            Self::Table1Pipeline => {
                d.extend(pipeline);
                d.extend([
                    ("mesh0", "0.05"),
                    ("tol", "1e-13"),
                    ("max_evals", "3000"),
                    ("max_attempts", "200"),
                ]);
            }
            Self::Fig8Gradient => {
                d.extend([("a", "-1"), ("b", "0.9"), ("mu", "1.25")]);
                d.extend(pipeline);
                d.extend([("max_iters", "200"), ("digits", "11"), ("max_attempts", "200")]);
            }
            Self::Collapse => d.extend([
                ("preset", "fig2"),
                ("n_steps", "1000000"),
                ("window", "20000"),
                ("threshold", "0.9"),
                ("persist", "5"),
                ("lyapunov_steps", "100000"),
            ]),
            Self::Protocol => d.extend([
                ("preset", "random"),
                ("delay_ms", "0"),
                ("free_run_steps", "200000"),
                ("target_bits", "0"),
                ("decimation", "10"),
                ("max_attempts", "200"),
            ]),
        }
        d
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown experiment kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub trials: usize,
    pub seed: u64,
    pub overrides: BTreeMap<String, String>,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, trials: usize, seed: u64, output_dir: impl Into<PathBuf>) -> Result<Self> {
        if trials < 1 {
            return Err(HarnessError::Usage("trials must be at least 1".into()));
        }
        Ok(Self {
            kind,
            trials,
            seed,
            overrides: BTreeMap::new(),
            output_dir: output_dir.into(),
        })
    }

    /// Adds an override; keys the experiment does not know are rejected.
    pub fn with_override(mut self, key: &str, value: impl Into<String>) -> Result<Self> {
        if !self.kind.defaults().iter().any(|(k, _)| *k == key) {
            return Err(HarnessError::UnknownOverride {
                key: key.into(),
                kind: self.kind.name().into(),
            });
        }
        self.overrides.insert(key.into(), value.into());
        Ok(self)
    }

    /// Parses `key=value` pairs.
    pub fn with_overrides<'a>(mut self, pairs: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| HarnessError::Usage(format!("override `{p}` is not key=value")))?;
            self = self.with_override(k.trim(), v.trim())?;
        }
        Ok(self)
    }
}

/// Defaults merged with overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: Vec<(&'static str, String)>,
}

impl Settings {
    pub fn resolve(spec: &ExperimentSpec) -> Result<Self> {
        let mut values = Vec::new();
        for (k, d) in spec.kind.defaults() {
            values.push((k, spec.overrides.get(k).cloned().unwrap_or_else(|| d.to_string())));
        }
        for k in spec.overrides.keys() {
            if !values.iter().any(|(v, _)| v == k) {
                return Err(HarnessError::UnknownOverride {
                    key: k.clone(),
                    kind: spec.kind.name().into(),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("setting `{key}` not declared"))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key);
        v.parse().map_err(|_| HarnessError::BadOverride {
            key: key.into(),
            value: v.into(),
        })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (*k, v.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub files: Vec<PathBuf>,
    pub summary: Vec<(String, String)>,
    /// Trials that ended in an error rather than a result.
    pub failed_trials: usize,
}

impl ExperimentReport {
    pub fn value(&self, key: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .and_then(|(_, v)| v.parse().ok())
    }
}

/// Output of one study before it is written out.
struct StudyOutput {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    summary: Vec<(String, String)>,
    extra_meta: Metadata,
    /// Additional tables: file name, header, rows.
    tables: Vec<(&'static str, Vec<&'static str>, Vec<Vec<String>>)>,
    wall: Vec<f64>,
    failed: usize,
}

/// Runs a study and writes `trials.csv`, `summary.csv` and `timing.csv` (plus
/// study-specific tables) under `output_dir/<kind>/`. Wall-clock times go only to
/// `timing.csv` so the other files are reproducible byte for byte.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    if spec.trials < 1 {
        return Err(HarnessError::Usage("trials must be at least 1".into()));
    }
    let settings = Settings::resolve(spec)?;
    let out = match spec.kind {
        ExperimentKind::Throughput => throughput_study(spec, &settings)?,
        ExperimentKind::SyncFragility => fragility_study(spec, &settings)?,
        ExperimentKind::BiSearch => bisearch_study(spec, &settings)?,
        ExperimentKind::Table1Pipeline | ExperimentKind::Fig8Gradient => {
            pipeline_study(spec, &settings)?
        }
        ExperimentKind::Collapse => collapse_study(&settings)?,
        ExperimentKind::Protocol => protocol_study(spec, &settings)?,
    };

    let mut meta: Metadata = vec![
        ("experiment".into(), spec.kind.name().into()),
        ("trials".into(), spec.trials.to_string()),
        ("seed".into(), spec.seed.to_string()),
        ("rng".into(), RNG_NAME.into()),
    ];
    meta.extend(settings.pairs().map(|(k, v)| (k.to_string(), v.to_string())));
    meta.extend(out.extra_meta.iter().cloned());

    let dir = spec.output_dir.join(spec.kind.name());
    let mut files = Vec::new();
    let mut write = |name: &str, header: &[&str], rows: &[Vec<String>]| -> Result<()> {
        let path = dir.join(name);
        emit_csv(&path, &meta, header, rows)?;
        files.push(path);
        Ok(())
    };
    write("trials.csv", &out.header, &out.rows)?;
    let summary_rows: Vec<Vec<String>> = out
        .summary
        .iter()
        .map(|(k, v)| vec![k.clone(), v.clone()])
        .collect();
    write("summary.csv", &["key", "value"], &summary_rows)?;
    for (name, header, rows) in &out.tables {
        write(name, header, rows)?;
    }
    let timing: Vec<Vec<String>> = out
        .wall
        .iter()
        .enumerate()
        .map(|(i, t)| vec![i.to_string(), format!("{t:.3}")])
        .collect();
    write("timing.csv", &["trial", "wall_time_s"], &timing)?;

    Ok(ExperimentReport {
        kind: spec.kind,
        files,
        summary: out.summary,
        failed_trials: out.failed,
    })
}

/// Seed for the screening of trial `i` plus the trial's own generator.
fn trial_streams(seed: u64, i: usize) -> (u64, hyperlock_core::rng::StudyRng) {
    let mut rng = trial_rng(seed, i as u64);
    let screen_seed = rng.next_u64();
    (screen_seed, rng)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn preset_system(s: &Settings) -> Result<SystemConfig> {
    let name = s.raw("preset");
    let p = presets::find(name)
        .ok_or_else(|| HarnessError::Usage(format!("unknown preset `{name}`")))?;
    let mut sys = p
        .system
        .ok_or_else(|| HarnessError::Usage(format!("preset `{name}` has no full session")))?;
    sys.step_h = s.get("step_h")?;
    Ok(sys)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn truth_of(c: &SystemConfig) -> EveConfig {
    EveConfig {
        x: c.alice.x,
        y: c.alice.y,
        z: c.alice.z,
        w: c.alice.w,
        eps_ex: c.coupling.eps_x,
    }
}

fn screened_random(
    screen_seed: u64,
    s: &Settings,
    params: Option<ControlParams>,
) -> Result<Screened> {
    let step_h: f64 = s.get("step_h")?;
    random_admitted(screen_seed, s.get("max_attempts")?, &screening_limits(), |rng| {
        let mut c = sample_system(rng);
        if let Some(p) = params {
            c.params = p;
        }
        c.step_h = step_h;
        c
    })
}

fn throughput_study(spec: &ExperimentSpec, s: &Settings) -> Result<StudyOutput> {
    let len: usize = s.get("orbit_len")?;
    if len < 3 {
        return Err(HarnessError::Usage("orbit_len must be at least 3".into()));
    }
    let results: Vec<(Result<(Screened, f64)>, f64)> = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            timed(|| {
                let (seed, _) = trial_streams(spec.seed, i);
                let sc = screened_random(seed, s, None)?;
                let c = sc.config;
                let cfg = IntegratorConfig::new(c.step_h, len - 1)?;
                let orbit = integrate(&c.init(), &c.params, &c.coupling, &cfg, ChannelDelay::NONE, &[Var::ZA])
                    .map_err(hyperlock_core::Error::from)?;
                let t = throughput(orbit.get(Var::ZA).expect("recorded"));
                Ok((sc, t))
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut vals = Vec::new();
    let mut failed = 0;
    for (i, (r, _)) in results.iter().enumerate() {
        match r {
            Ok((sc, t)) => {
                vals.push(*t);
                let c = &sc.config;
                rows.push(vec![
                    i.to_string(),
                    sc.attempts.to_string(),
                    num(c.params.a),
                    num(c.params.b),
                    num(c.params.mu),
                    num(c.coupling.eps_x),
                    num(c.coupling.eps_z),
                    num(*t),
                    "ok".into(),
                ]);
            }
            Err(e) => {
                failed += 1;
                let mut row = vec![i.to_string()];
                row.extend(std::iter::repeat(String::new()).take(7));
                row.push(e.to_string());
                rows.push(row);
            }
        }
    }
    let attempts: Vec<f64> = results
        .iter()
        .filter_map(|(r, _)| r.as_ref().ok().map(|(sc, _)| sc.attempts as f64))
        .collect();
    Ok(StudyOutput {
        header: vec!["trial", "attempts", "a", "b", "mu", "eps_x", "eps_z", "throughput", "status"],
        rows,
        summary: vec![
            kv("orbits", vals.len()),
            kv("failed", failed),
            kv("mean", num(mean(&vals))),
            kv("median", num(median(&vals))),
            kv("min", num(vals.iter().copied().fold(f64::INFINITY, f64::min))),
            kv("max", num(vals.iter().copied().fold(f64::NEG_INFINITY, f64::max))),
            kv("mean_attempts", num(mean(&attempts))),
        ],
        extra_meta: Vec::new(),
        tables: Vec::new(),
        wall: results.iter().map(|(_, t)| *t).collect(),
        failed,
    })
}

fn fragility_study(spec: &ExperimentSpec, s: &Settings) -> Result<StudyOutput> {
    let base = preset_system(s)?;
    let opts = FragilityOptions {
        threshold: s.get("threshold")?,
        hold: s.get("hold")?,
        max_steps: s.get("max_steps")?,
    };
    let (report, wall) = timed(|| sync_fragility_study(&base, spec.trials, spec.seed, &opts));
    let rows = report
        .trials
        .iter()
        .enumerate()
        .map(|(i, (bob, v))| {
            vec![
                i.to_string(),
                num(bob.x),
                num(bob.y),
                num(bob.z),
                num(bob.w),
                v.synchronized.to_string(),
                v.detect_step.map(|d| d.to_string()).unwrap_or_default(),
                num(v.terminal_error),
            ]
        })
        .collect();
    Ok(StudyOutput {
        header: vec!["trial", "x_B0", "y_B0", "z_B0", "w_B0", "synchronized", "detect_step", "terminal_error"],
        rows,
        summary: vec![
            kv("trials", report.n_trials),
            kv("failures", report.failures),
            kv("failure_rate", num(report.rate)),
        ],
        extra_meta: config_metadata("base.", &base),
        tables: Vec::new(),
        wall: vec![wall],
        failed: 0,
    })
}

fn bisearch_study(spec: &ExperimentSpec, s: &Settings) -> Result<StudyOutput> {
    let steps: usize = s.get("steps")?;
    let iters: usize = s.get("iters")?;
    let bracket: (f64, f64) = (s.get("bracket_lo")?, s.get("bracket_hi")?);
    let randomize = match s.raw("context") {
        "random" => true,
        "exact" => false,
        other => {
            return Err(HarnessError::BadOverride {
                key: "context".into(),
                value: other.into(),
            })
        }
    };
    let bounds = GridBounds::default();
    let results: Vec<(Result<(Screened, EstimationReport)>, f64)> = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            timed(|| {
                let (seed, mut rng) = trial_streams(spec.seed, i);
                let sc = screened_random(seed, s, None)?;
                let c = sc.config;
                let obs = Observation::record(&c, steps)?;
                let obj = NmseObjective::new(
                    &obs,
                    &NmseConfig::default().with_horizon(steps as f64 * c.step_h),
                )?;
                let truth = truth_of(&c);
                let fixed = if randomize {
                    EveConfig {
                        eps_ex: rng.gen_range(bounds.eps.0..=bounds.eps.1),
                        x: rng.gen_range(bounds.x.0..=bounds.x.1),
                        y: rng.gen_range(bounds.y.0..=bounds.y.1),
                        z: obs.z_a0(),
                        w: 0.0,
                    }
                } else {
                    truth
                };
                let r = bisearch_w(&obj, &fixed, bracket, iters).with_truth(truth);
                Ok((sc, r))
            })
        })
        .collect();
    let mut rows = Vec::new();
    let mut errs = Vec::new();
    let mut failed = 0;
    let mut not_unimodal = 0;
    for (i, (r, _)) in results.iter().enumerate() {
        match r {
            Ok((sc, rep)) => {
                let e = rep.abs_errors.expect("truth set")[3];
                errs.push(e);
                if rep.status == hyperlock_core::attacks::Status::NotUnimodal {
                    not_unimodal += 1;
                }
                rows.push(vec![
                    i.to_string(),
                    sc.attempts.to_string(),
                    num(sc.config.alice.w),
                    num(rep.estimates.w),
                    num(e),
                    num(rep.final_nmse),
                    rep.evaluations.to_string(),
                    rep.status.to_string(),
                ]);
            }
            Err(e) => {
                failed += 1;
                rows.push(vec![i.to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()]);
            }
        }
    }
    let frac = |t: f64| errs.iter().filter(|e| **e <= t).count() as f64 / errs.len().max(1) as f64;
    Ok(StudyOutput {
        header: vec!["trial", "attempts", "w_true", "w_est", "abs_error", "nmse", "evaluations", "status"],
        rows,
        summary: vec![
            kv("trials", errs.len()),
            kv("failed", failed),
            kv("mean_error", num(mean(&errs))),
            kv("median_error", num(median(&errs))),
            kv("frac_le_1e-8", num(frac(1e-8))),
            kv("frac_le_1e-9", num(frac(1e-9))),
            kv("frac_le_1e-11", num(frac(1e-11))),
            kv("not_unimodal", not_unimodal),
        ],
        extra_meta: Vec::new(),
        tables: Vec::new(),
        wall: results.iter().map(|(_, t)| *t).collect(),
        failed,
    })
}

const PARAM_NAMES: [&str; 4] = ["eps_x", "x_A0", "y_A0", "w_A0"];

fn pipeline_study(spec: &ExperimentSpec, s: &Settings) -> Result<StudyOutput> {
    let gradient = spec.kind == ExperimentKind::Fig8Gradient;
    let refiner = if gradient {
        Refiner::Gradient(GradientOptions {
            max_iters: s.get("max_iters")?,
            ..GradientOptions::default()
        })
    } else {
        Refiner::Pattern(PatternOptions {
            mesh0: s.get("mesh0")?,
            tol: s.get("tol")?,
            max_evals: s.get("max_evals")?,
            ..PatternOptions::default()
        })
    };
    let opts = PipelineOptions {
        m: s.get("m")?,
        n: s.get("n")?,
        short_steps: s.get("short_steps")?,
        long_steps: s.get("long_steps")?,
        top_k: s.get("top_k")?,
        use_bisearch: s.get("use_bisearch")?,
        bisearch_iters: s.get("bisearch_iters")?,
        refiner,
        ..PipelineOptions::default()
    };
    let params = if gradient {
        Some(ControlParams::new(s.get("a")?, s.get("b")?, s.get("mu")?)?)
    } else {
        None
    };
    let digits: usize = if gradient { s.get("digits")? } else { 11 };
    let results: Vec<(Result<(Screened, EstimationReport)>, f64)> = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            timed(|| {
                let (seed, mut rng) = trial_streams(spec.seed, i);
                let sc = screened_random(seed, s, params)?;
                let c = sc.config;
                let obs = Observation::record(&c, opts.long_steps.max(opts.short_steps))?;
                let r = run_pipeline(&obs, &opts, &mut rng, Some(truth_of(&c)))?;
                Ok((sc, r.best))
            })
        })
        .collect();

    let mut rows = Vec::new();
    let mut errs: [Vec<f64>; 4] = Default::default();
    let mut recovered = 0;
    let mut failed = 0;
    for (i, (r, _)) in results.iter().enumerate() {
        match r {
            Ok((sc, rep)) => {
                let e = rep.abs_errors.expect("truth set");
                let t = rep.truth.expect("truth set").theta();
                let est = rep.estimates.theta();
                let full = hyperlock_core::attacks::complete_recovery(&est, &t, digits);
                recovered += usize::from(full);
                let mut row = vec![i.to_string(), sc.attempts.to_string()];
                row.extend(t.iter().map(|v| num(*v)));
                row.extend(est.iter().map(|v| num(*v)));
                row.extend(e.iter().map(|v| num(*v)));
                for (k, v) in e.iter().enumerate() {
                    errs[k].push(*v);
                }
                row.extend([
                    num(rep.final_nmse),
                    rep.evaluations.to_string(),
                    rep.status.to_string(),
                    full.to_string(),
                ]);
                rows.push(row);
            }
            Err(e) => {
                failed += 1;
                let mut row = vec![i.to_string()];
                row.extend(std::iter::repeat(String::new()).take(16));
                row.push(e.to_string());
                row.push(String::new());
                rows.push(row);
            }
        }
    }
    let n_ok = errs[0].len();
    let mut summary = vec![kv("trials", n_ok), kv("failed", failed)];
    for (k, name) in PARAM_NAMES.iter().enumerate() {
        summary.push(kv(&format!("mean_error_{name}"), num(mean(&errs[k]))));
        summary.push(kv(&format!("median_error_{name}"), num(median(&errs[k]))));
    }
    summary.push(kv(
        "complete_recovery_rate",
        num(recovered as f64 / n_ok.max(1) as f64),
    ));

    let hist: Vec<[(i32, usize); 17]> = errs
        .iter()
        .map(|e| {
            decade_histogram(e, -16, 0)
                .try_into()
                .expect("17 decades")
        })
        .collect();
    let hist_rows = (0..17)
        .map(|b| {
            let mut r = vec![format!("1e{}", hist[0][b].0)];
            for h in &hist {
                r.push(h[b].1.to_string());
                r.push(num(h[b].1 as f64 / n_ok.max(1) as f64));
            }
            r
        })
        .collect();
    let hist_header = vec![
        "decade", "eps_x_count", "eps_x_fraction", "x_A0_count", "x_A0_fraction", "y_A0_count",
        "y_A0_fraction", "w_A0_count", "w_A0_fraction",
    ];
    let method = if gradient {
        "central-difference descent (substitute for the cited gradient method)"
    } else {
        "compass pattern search"
    };
    Ok(StudyOutput {
        header: vec![
            "trial", "attempts", "eps_x_true", "x_A0_true", "y_A0_true", "w_A0_true", "eps_x_est",
            "x_A0_est", "y_A0_est", "w_A0_est", "eps_x_error", "x_A0_error", "y_A0_error",
            "w_A0_error", "nmse", "evaluations", "status", "complete_recovery",
        ],
        rows,
        summary,
        extra_meta: vec![("refiner".into(), method.into())],
        tables: vec![("histograms.csv", hist_header, hist_rows)],
        wall: results.iter().map(|(_, t)| *t).collect(),
        failed,
    })
}

/// Collapse step and largest exponent of the orbit after it.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOutcome {
    pub collapse_step: Option<usize>,
    pub profile: Vec<(usize, f64)>,
    pub post_collapse_lle: Option<f64>,
}

/// Runs `sys` for `n_steps`, looks for collapse in `x_A`, and measures the largest
/// Lyapunov exponent of the coupled system from the collapse state onward.
pub fn collapse_run(
    sys: &SystemConfig,
    n_steps: usize,
    window: usize,
    opts: &CollapseOptions,
    lyapunov_steps: usize,
) -> Result<CollapseOutcome> {
    let cfg = IntegratorConfig::new(sys.step_h, n_steps)?;
    let orbit = integrate(&sys.init(), &sys.params, &sys.coupling, &cfg, ChannelDelay::NONE, &Var::COUPLED)
        .map_err(hyperlock_core::Error::from)?;
    let x = orbit.get(Var::XA).expect("recorded");
    let profile = concentration_profile(x, window, opts)?;
    let collapse_step = detect_collapse(x, window, opts)?;
    let post_collapse_lle = match collapse_step {
        Some(k) => {
            let state: [f64; 8] =
                std::array::from_fn(|j| orbit.get(Var::COUPLED[j]).expect("recorded")[k]);
            let steps = lyapunov_steps.min(n_steps - k).max(10);
            let lcfg = IntegratorConfig::new(sys.step_h, steps)?;
            let lo = LyapunovOptions {
                band: f64::INFINITY,
                ..LyapunovOptions::default()
            };
            let sp = lyapunov_spectrum_with(
                &sys.params,
                &sys.coupling,
                &CoupledState::from_array(state),
                &lcfg,
                &lo,
            )?;
            Some(sp.largest())
        }
        None => None,
    };
    Ok(CollapseOutcome {
        collapse_step,
        profile,
        post_collapse_lle,
    })
}

fn collapse_study(s: &Settings) -> Result<StudyOutput> {
    let sys = preset_system(s)?;
    let opts = CollapseOptions {
        threshold: s.get("threshold")?,
        persist: s.get("persist")?,
        ..CollapseOptions::new(sys.step_h)
    };
    // Deterministic: one run regardless of `trials`.
    let (out, wall) = timed(|| {
        collapse_run(&sys, s.get("n_steps")?, s.get("window")?, &opts, s.get("lyapunov_steps")?)
    });
    let out = out?;
    let rows = vec![vec![
        "0".into(),
        out.collapse_step.map(|k| k.to_string()).unwrap_or_default(),
        out.post_collapse_lle.map(num).unwrap_or_default(),
    ]];
    let profile = out
        .profile
        .iter()
        .map(|(w, c)| vec![w.to_string(), num(*c)])
        .collect();
    Ok(StudyOutput {
        header: vec!["trial", "collapse_step", "post_collapse_lle"],
        rows,
        summary: vec![
            kv("detected", out.collapse_step.is_some()),
            kv("collapse_step", out.collapse_step.map(|k| k.to_string()).unwrap_or_default()),
            kv("post_collapse_lle", out.post_collapse_lle.map(num).unwrap_or_default()),
        ],
        extra_meta: config_metadata("system.", &sys),
        tables: vec![("concentration.csv", vec!["window_start", "concentration"], profile)],
        wall: vec![wall],
        failed: 0,
    })
}

fn protocol_study(spec: &ExperimentSpec, s: &Settings) -> Result<StudyOutput> {
    let fixed = match s.raw("preset") {
        "random" => None,
        _ => Some(preset_system(s)?),
    };
    let delay_ms: f64 = s.get("delay_ms")?;
    let target: usize = s.get("target_bits")?;
    let limits = ProtocolLimits {
        free_run_steps: s.get("free_run_steps")?,
        target_bits: (target > 0).then_some(target),
        decimation: s.get("decimation")?,
        ..ProtocolLimits::default()
    };
    let results: Vec<(Result<(usize, SystemConfig, hyperlock_core::cipher::ProtocolSession)>, f64)> =
        (0..spec.trials)
            .into_par_iter()
            .map(|i| {
                timed(|| {
                    let (attempts, mut c) = match fixed {
                        Some(c) => (0, c),
                        None => {
                            let (seed, _) = trial_streams(spec.seed, i);
                            let sc = screened_random(seed, s, None)?;
                            (sc.attempts, sc.config)
                        }
                    };
                    c.delay_ms = delay_ms;
                    let mut session = run_protocol(&c, &c, c.channel_delay(), &limits);
                    session.drop_transcript();
                    Ok((attempts, c, session))
                })
            })
            .collect();
    let mut rows = Vec::new();
    let mut latencies = Vec::new();
    let mut ciphering = 0;
    let mut failed = 0;
    for (i, (r, _)) in results.iter().enumerate() {
        match r {
            Ok((attempts, c, session)) => {
                let ok = session.stage == Stage::Ciphering;
                ciphering += usize::from(ok);
                if let Some(l) = session.steps_per_bit() {
                    latencies.push(l);
                }
                let bits = session.alice_keystream.as_ref().map_or(0, |k| k.len());
                let lle = session
                    .spectrum
                    .as_ref()
                    .map(|sp| num(sp.largest()))
                    .unwrap_or_default();
                rows.push(vec![
                    i.to_string(),
                    attempts.to_string(),
                    crate::output::config_hash(c),
                    format!("{:?}", session.stage),
                    session.failure.as_ref().map(|f| f.to_string()).unwrap_or_default(),
                    session.sync_verdict.detect_step.map(|d| d.to_string()).unwrap_or_default(),
                    session.free_run_steps.to_string(),
                    bits.to_string(),
                    session.steps_per_bit().map(num).unwrap_or_default(),
                    lle,
                ]);
            }
            Err(e) => {
                failed += 1;
                let mut row = vec![i.to_string()];
                row.extend(std::iter::repeat(String::new()).take(3));
                row.push(e.to_string());
                row.extend(std::iter::repeat(String::new()).take(5));
                rows.push(row);
            }
        }
    }
    let n = spec.trials - failed;
    Ok(StudyOutput {
        header: vec![
            "trial", "attempts", "config_hash", "stage", "failure", "detect_step",
            "free_run_steps", "keystream_bits", "steps_per_bit", "largest_exponent",
        ],
        rows,
        summary: vec![
            kv("sessions", n),
            kv("failed", failed),
            kv("ciphering", ciphering),
            kv("ciphering_rate", num(ciphering as f64 / n.max(1) as f64)),
            kv("mean_steps_per_bit", num(mean(&latencies))),
        ],
        extra_meta: fixed.map(|c| config_metadata("system.", &c)).unwrap_or_default(),
        tables: Vec::new(),
        wall: results.iter().map(|(_, t)| *t).collect(),
        failed,
    })
}

/// Loads a configuration file or, failing that, a preset by name.
pub fn load_system(arg: &str) -> Result<SystemConfig> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        return Ok(hyperlock_core::config::parse_config(&text)?);
    }
    presets::find(arg)
        .and_then(|p| p.system)
        .ok_or_else(|| HarnessError::Usage(format!("`{arg}` is neither a file nor a full preset")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_override_rejected() {
        let spec = ExperimentSpec::new(ExperimentKind::Throughput, 1, 0, "/tmp/x").unwrap();
        assert!(matches!(
            spec.clone().with_override("epsilon_q", "1"),
            Err(HarnessError::UnknownOverride { .. })
        ));
        let spec = spec.with_override("orbit_len", "500").unwrap();
        let s = Settings::resolve(&spec).unwrap();
        assert_eq!(s.get::<usize>("orbit_len").unwrap(), 500);
        assert!(ExperimentSpec::new(ExperimentKind::Throughput, 0, 0, "/tmp/x").is_err());
    }

    #[test]
    fn kinds_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
