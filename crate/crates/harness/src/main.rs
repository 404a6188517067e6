use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use hyperlock::error::{HarnessError, Result};
use hyperlock::experiment::load_system;
use hyperlock::output::{config_hash, config_metadata, emit_csv, num, orbit_rows, render_csv};
use hyperlock::{presets, run_experiment, ExperimentKind, ExperimentSpec};
use hyperlock_core::analysis::{
    concentration_profile, free_run_spectrum, lyapunov_spectrum_with, morlet_cwt, CollapseOptions,
    LyapunovOptions,
};
use hyperlock_core::attacks::{
    bisearch_w, coarse_grid_search, run_pipeline, EstimationReport, EveConfig, GradientOptions,
    GridBounds, NmseConfig, NmseObjective, Observation, PatternOptions, PipelineOptions, Refiner,
};
use hyperlock_core::cipher::{run_protocol, vernam, ProtocolLimits, Stage};
use hyperlock_core::config::SystemConfig;
use hyperlock_core::dynamics::{integrate, Var};
use hyperlock_core::rng::trial_rng;

#[derive(Parser)]
#[command(name = "hyperlock", version, about = "Chaotic-synchronization cryptosystem workbench")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed for randomized runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the integration step of the loaded configuration.
    #[arg(long, global = true)]
    step_h: Option<f64>,
    /// Override the step count of the loaded configuration.
    #[arg(long, global = true)]
    n_steps: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a coupled session and write the orbit as CSV.
    Simulate {
        #[arg(long)]
        config: String,
        /// Channels to record, comma separated (x_A,y_A,...).
        #[arg(long, default_value = "x_A,z_A,x_B,z_B")]
        vars: String,
    },
    /// Lyapunov spectrum of a session.
    Lyapunov {
        #[arg(long)]
        config: String,
        /// Spectrum of the two nodes running uncoupled.
        #[arg(long)]
        free: bool,
    },
    /// Morlet scalogram and concentration profile of one channel.
    Cwt {
        #[arg(long)]
        config: String,
        #[arg(long, default_value = "x_A")]
        var: String,
        #[arg(long, default_value_t = 20000)]
        window: usize,
    },
    /// Run the protocol and write Alice's keystream file.
    Keystream {
        #[arg(long)]
        config: String,
    },
    /// Agree on a keystream with the protocol and XOR it into a file.
    Encrypt {
        #[arg(long)]
        config: String,
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Run a two-party session.
    Protocol {
        #[arg(long)]
        alice: String,
        #[arg(long)]
        bob: String,
        #[arg(long, default_value_t = 0.0)]
        delay_ms: f64,
    },
    /// Eavesdropper parameter recovery on a recorded session.
    Attack(AttackArgs),
    /// Seeded batch study.
    Study {
        kind: String,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        /// Setting override, key=value; repeatable.
        #[arg(long = "set")]
        set: Vec<String>,
    },
    /// Named configurations.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    List,
    Show { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum AttackKind {
    Bisearch,
    Grid,
    Pattern,
    Gradient,
    Pipeline,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(value_enum)]
    kind: AttackKind,
    #[arg(long)]
    config: String,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long = "M", default_value_t = 20)]
    m: usize,
    #[arg(long = "N", default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    mesh0: f64,
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
    /// Recorded steps of the exchange.
    #[arg(long, default_value_t = 3200)]
    record_steps: usize,
}

enum Failure {
    Usage(String),
    Experiment(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Usage(_)
            | HarnessError::UnknownOverride { .. }
            | HarnessError::BadOverride { .. } => Failure::Usage(e.to_string()),
            HarnessError::Core(hyperlock_core::Error::Parse { .. }) => Failure::Usage(e.to_string()),
            _ => Failure::Experiment(e.to_string()),
        }
    }
}

impl From<hyperlock_core::Error> for Failure {
    fn from(e: hyperlock_core::Error) -> Self {
        HarnessError::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(j) = cli.global.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Experiment(m)) => {
            eprintln!("failed: {m}");
            ExitCode::from(2)
        }
    }
}

fn system(arg: &str, g: &Global) -> Result<SystemConfig> {
    let mut s = load_system(arg)?;
    if let Some(h) = g.step_h {
        s.step_h = h;
    }
    if let Some(n) = g.n_steps {
        s.n_steps = n;
    }
    s.integrator()?;
    Ok(s)
}

/// Writes to `--out` when given, stdout otherwise.
fn deliver(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| HarnessError::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match cli.command {
        Command::Simulate { config, vars } => {
            let s = system(&config, g)?;
            let vars: Vec<Var> = vars
                .split(',')
                .map(|v| v.trim().parse::<Var>())
                .collect::<hyperlock_core::Result<_>>()
                .map_err(HarnessError::from)?;
            let orbit = integrate(&s.init(), &s.params, &s.coupling, &s.integrator()?, s.channel_delay(), &vars)
                .map_err(|d| Failure::Experiment(format!("diverged at step {}", d.step)))?;
            let (header, rows) = orbit_rows(&orbit);
            deliver(out, &render_csv(&config_metadata("", &s), &header, &rows))?;
        }
        Command::Lyapunov { config, free } => {
            let s = system(&config, g)?;
            let cfg = s.integrator()?;
            let opts = LyapunovOptions::default();
            let sp = if free {
                free_run_spectrum(&s.params, &s.init(), &cfg, &opts)
            } else {
                lyapunov_spectrum_with(&s.params, &s.coupling, &s.init(), &cfg, &opts)
            }
            .map_err(HarnessError::from)?;
            let rows: Vec<Vec<String>> = sp
                .exponents
                .iter()
                .enumerate()
                .map(|(i, e)| vec![(i + 1).to_string(), num(*e)])
                .collect();
            deliver(out, &render_csv(&config_metadata("", &s), &["index", "exponent"], &rows))?;
        }
        Command::Cwt { config, var, window } => {
            let s = system(&config, g)?;
            let v: Var = var.parse().map_err(HarnessError::from)?;
            let orbit = integrate(&s.init(), &s.params, &s.coupling, &s.integrator()?, s.channel_delay(), &[v])
                .map_err(|d| Failure::Experiment(format!("diverged at step {}", d.step)))?;
            let x = orbit.get(v).expect("recorded");
            let opts = CollapseOptions::new(s.step_h);
            let sg = morlet_cwt(x, &opts.scales, s.step_h).map_err(HarnessError::from)?;
            let profile = concentration_profile(x, window, &opts).map_err(HarnessError::from)?;
            let meta = config_metadata("", &s);
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("cwt"));
            let mut header = vec!["step".to_string()];
            header.extend(sg.scales.iter().map(|s| format!("scale_{}", num(*s))));
            let header_ref: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows: Vec<Vec<String>> = sg
                .times
                .iter()
                .enumerate()
                .map(|(j, t)| {
                    let mut r = vec![t.to_string()];
                    r.extend(sg.magnitude.iter().map(|row| num(row[j])));
                    r
                })
                .collect();
            emit_csv(&dir.join("scalogram.csv"), &meta, &header_ref, &rows)?;
            let rows: Vec<Vec<String>> = profile
                .iter()
                .map(|(w, c)| vec![w.to_string(), num(*c)])
                .collect();
            emit_csv(&dir.join("concentration.csv"), &meta, &["window_start", "concentration"], &rows)?;
        }
        Command::Keystream { config } => {
            let s = system(&config, g)?;
            let limits = ProtocolLimits {
                free_run_steps: s.n_steps,
                ..ProtocolLimits::default()
            };
            let session = run_protocol(&s, &s, s.channel_delay(), &limits);
            let ks = match (session.stage, session.alice_keystream) {
                (Stage::Ciphering, Some(k)) => k,
                _ => {
                    return Err(Failure::Experiment(format!(
                        "session failed: {}",
                        session.failure.map(|f| f.to_string()).unwrap_or_default()
                    )))
                }
            };
            deliver(out, &ks.to_file_string(&config_hash(&s)))?;
        }
        Command::Encrypt { config, input } => {
            let s = system(&config, g)?;
            let data = fs::read(&input).map_err(|e| HarnessError::io(&input, e))?;
            let limits = ProtocolLimits {
                free_run_steps: g.n_steps.unwrap_or(usize::MAX),
                target_bits: Some(8 * data.len()),
                ..ProtocolLimits::default()
            };
            let session = run_protocol(&s, &s, s.channel_delay(), &limits);
            let Some(ks) = session.alice_keystream.filter(|_| session.stage == Stage::Ciphering) else {
                return Err(Failure::Experiment(format!(
                    "session failed: {}",
                    session.failure.map(|f| f.to_string()).unwrap_or_default()
                )));
            };
            let cipher = vernam(&data, &ks).map_err(HarnessError::from)?;
            let dest = out.ok_or_else(|| Failure::Usage("encrypt needs --out".into()))?;
            fs::write(dest, cipher).map_err(|e| HarnessError::io(dest, e))?;
        }
        Command::Protocol { alice, bob, delay_ms } => {
            let mut a = system(&alice, g)?;
            let mut b = system(&bob, g)?;
            a.delay_ms = delay_ms;
            b.delay_ms = delay_ms;
            let limits = ProtocolLimits {
                free_run_steps: g.n_steps.unwrap_or(ProtocolLimits::default().free_run_steps),
                ..ProtocolLimits::default()
            };
            let session = run_protocol(&a, &b, a.channel_delay(), &limits);
            let mut rows = vec![
                vec!["stage".into(), format!("{:?}", session.stage)],
                vec!["history".into(), format!("{:?}", session.history).replace(',', ";")],
                vec![
                    "detect_step".into(),
                    session.sync_verdict.detect_step.map(|d| d.to_string()).unwrap_or_default(),
                ],
                vec!["free_run_steps".into(), session.free_run_steps.to_string()],
                vec![
                    "keystream_bits".into(),
                    session.alice_keystream.as_ref().map_or(0, |k| k.len()).to_string(),
                ],
                vec!["steps_per_bit".into(), session.steps_per_bit().map(num).unwrap_or_default()],
            ];
            if let Some(sp) = &session.spectrum {
                for (i, e) in sp.exponents.iter().enumerate() {
                    rows.push(vec![format!("exponent_{}", i + 1), num(*e)]);
                }
            }
            if let Some(f) = &session.failure {
                rows.push(vec!["failure".into(), f.to_string()]);
            }
            let mut meta = config_metadata("alice.", &a);
            meta.extend(config_metadata("bob.", &b));
            deliver(out, &render_csv(&meta, &["key", "value"], &rows))?;
            if session.stage != Stage::Ciphering {
                return Err(Failure::Experiment("session did not reach ciphering".into()));
            }
        }
        Command::Attack(args) => attack(&args, g)?,
        Command::Study { kind, trials, set } => {
            let kind: ExperimentKind = kind.parse()?;
            let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("results"));
            let spec = ExperimentSpec::new(kind, trials, g.seed, dir)?
                .with_overrides(set.iter().map(String::as_str))?;
            let report = run_experiment(&spec)?;
            for (k, v) in &report.summary {
                println!("{k} = {v}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.failed_trials == trials {
                return Err(Failure::Experiment("every trial failed".into()));
            }
        }
        Command::Presets { action } => match action {
            PresetAction::List => {
                for p in presets::all() {
                    println!("{:<8} {}", p.name, p.notes);
                }
            }
            PresetAction::Show { name } => {
                let p = presets::find(&name)
                    .ok_or_else(|| Failure::Usage(format!("unknown preset `{name}`")))?;
                match p.system {
                    Some(s) => print!("# {}\n{}", p.notes, hyperlock_core::config::emit_config(&s)),
                    None => println!(
                        "# {}\na = {}\nb = {}\nmu = {}",
                        p.notes,
                        num(p.params.a),
                        num(p.params.b),
                        num(p.params.mu)
                    ),
                }
            }
        },
    }
    Ok(())
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

fn attack(args: &AttackArgs, g: &Global) -> std::result::Result<(), Failure> {
    if args.trials < 1 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let s = system(&args.config, g)?;
    let obs = Observation::record(&s, args.record_steps).map_err(HarnessError::from)?;
    let truth = truth_of(&s);
    let short_steps = 400.min(args.record_steps);
    let bounds = GridBounds::default();
    let pattern = PatternOptions {
        mesh0: args.mesh0,
        tol: args.tol,
        ..PatternOptions::default()
    };
    let base = PipelineOptions {
        m: args.m,
        n: args.n,
        short_steps,
        long_steps: args.record_steps,
        refiner: Refiner::Pattern(pattern),
        ..PipelineOptions::default()
    };
    let opts = match args.kind {
        AttackKind::Pattern => PipelineOptions { top_k: 1, ..base },
        AttackKind::Gradient => PipelineOptions {
            top_k: 1,
            refiner: Refiner::Gradient(GradientOptions::default()),
            ..base
        },
        _ => base,
    };
    let mut rows = Vec::new();
    for trial in 0..args.trials {
        let mut rng = trial_rng(g.seed, trial as u64);
        let t0 = Instant::now();
        let report: EstimationReport = match args.kind {
            AttackKind::Bisearch | AttackKind::Grid => {
                let obj = NmseObjective::new(
                    &obs,
                    &NmseConfig::default().with_horizon(short_steps as f64 * s.step_h),
                )
                .map_err(HarnessError::from)?;
                let fixed = EveConfig {
                    eps_ex: rng.gen_range(bounds.eps.0..=bounds.eps.1),
                    x: rng.gen_range(bounds.x.0..=bounds.x.1),
                    y: rng.gen_range(bounds.y.0..=bounds.y.1),
                    z: obs.z_a0(),
                    w: 0.0,
                };
                let b = bisearch_w(&obj, &fixed, opts.bracket, opts.bisearch_iters);
                if matches!(args.kind, AttackKind::Bisearch) {
                    b
                } else {
                    coarse_grid_search(args.m, args.n, &bounds, b.estimates.w, &obj)
                        .map_err(HarnessError::from)?
                        .0
                }
            }
            _ => run_pipeline(&obs, &opts, &mut rng, None).map_err(HarnessError::from)?.best,
        }
        .with_truth(truth);
        let wall = t0.elapsed().as_secs_f64();
        let e = report.abs_errors.expect("truth set");
        let mut row = vec![trial.to_string(), report.method.to_string()];
        row.extend(truth.theta().iter().map(|v| num(*v)));
        row.extend(report.estimates.theta().iter().map(|v| num(*v)));
        row.extend(e.iter().map(|v| num(*v)));
        row.extend([
            num(report.final_nmse),
            report.evaluations.to_string(),
            report.status.to_string(),
            format!("{wall:.3}"),
        ]);
        rows.push(row);
    }
    let mut meta = config_metadata("", &s);
    meta.extend([
        ("attack_seed".to_string(), g.seed.to_string()),
        ("M".into(), args.m.to_string()),
        ("N".into(), args.n.to_string()),
        ("mesh0".into(), num(args.mesh0)),
        ("tol".into(), num(args.tol)),
        ("record_steps".into(), args.record_steps.to_string()),
    ]);
    let header = [
        "trial", "method", "eps_x_true", "x_A0_true", "y_A0_true", "w_A0_true", "eps_x_est",
        "x_A0_est", "y_A0_est", "w_A0_est", "eps_x_error", "x_A0_error", "y_A0_error",
        "w_A0_error", "nmse", "evaluations", "status", "wall_time_s",
    ];
    deliver(g.out.as_deref(), &render_csv(&meta, &header, &rows))?;
    Ok(())
}
