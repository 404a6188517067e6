use std::fmt;

use super::keystream::{Keystream, KeystreamBuilder, DEFAULT_DECIMATION};
use crate::analysis::{
    free_run_spectrum, is_hyperchaotic, LyapunovOptions, LyapunovSpectrum, MinimaScanner,
    SyncDetector, SyncVerdict,
};
use crate::config::SystemConfig;
use crate::dynamics::{
    free_step, ChannelDelay, CoupledState, CoupledStepper, CouplingParams, DriveSignal,
    IntegratorConfig, Var, DEFAULT_DIVERGENCE_BOUND,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Exchanging,
    Synchronized,
    FreeRunning,
    Ciphering,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureReason {
    ParameterMismatch,
    NoSync,
    Diverged { step: usize },
    NotHyperchaotic,
    NoKeystream,
    KeystreamMismatch { first_difference: Option<usize> },
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ParameterMismatch => f.write_str("parameter-mismatch"),
            Self::NoSync => f.write_str("no-sync"),
            Self::Diverged { step } => write!(f, "diverged at step {step}"),
            Self::NotHyperchaotic => f.write_str("not-hyperchaotic"),
            Self::NoKeystream => f.write_str("no-keystream"),
            Self::KeystreamMismatch { .. } => f.write_str("keystream-mismatch"),
        }
    }
}

/// Step budgets and thresholds for one session.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolLimits {
    pub max_exchange_steps: usize,
    /// Synchronization threshold on `max(|x_A − x_B|, |z_A − z_B|)`. The default
    /// demands exact equality: uncoupled chaotic systems that differ in the last bit
    /// drift apart during the free run.
    pub sync_threshold: f64,
    pub sync_hold: usize,
    pub free_run_steps: usize,
    /// Stop the free run early once both keystreams hold this many bits.
    pub target_bits: Option<usize>,
    pub decimation: usize,
    /// Steps of the Lyapunov run used for the hyperchaos check.
    pub lyapunov_steps: usize,
    pub hyperchaos_tol: f64,
}

impl Default for ProtocolLimits {
    fn default() -> Self {
        Self {
            max_exchange_steps: 1_000_000,
            sync_threshold: f64::MIN_POSITIVE,
            sync_hold: 1000,
            free_run_steps: 200_000,
            target_bits: None,
            decimation: DEFAULT_DECIMATION,
            lyapunov_steps: 100_000,
            hyperchaos_tol: 1e-2,
        }
    }
}

/// Signals that crossed the public channel, as stage samples per step.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub z_a: DriveSignal,
    pub x_b: DriveSignal,
}

impl Transcript {
    /// Steps covered.
    pub fn len(&self) -> usize {
        self.x_b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_b.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSession {
    pub stage: Stage,
    /// Stages visited, in order.
    pub history: Vec<Stage>,
    pub alice_cfg: SystemConfig,
    pub bob_cfg: SystemConfig,
    pub transcript: Transcript,
    pub sync_verdict: SyncVerdict,
    pub free_run_steps: usize,
    pub spectrum: Option<LyapunovSpectrum>,
    pub alice_keystream: Option<Keystream>,
    pub bob_keystream: Option<Keystream>,
    pub failure: Option<FailureReason>,
}

impl ProtocolSession {
    fn enter(&mut self, stage: Stage) {
        self.stage = stage;
        self.history.push(stage);
    }

    fn fail(mut self, reason: FailureReason) -> Self {
        self.failure = Some(reason);
        self.enter(Stage::Failed);
        self
    }

    /// Releases the recorded exchange, which dominates a session's memory.
    pub fn drop_transcript(&mut self) {
        let h = self.transcript.x_b.step_h();
        self.transcript = Transcript {
            z_a: DriveSignal::from_stages(h, Vec::new()),
            x_b: DriveSignal::from_stages(h, Vec::new()),
        };
    }

    /// Free-run steps spent per keystream bit: the latency a sender waits per bit.
    pub fn steps_per_bit(&self) -> Option<f64> {
        let bits = self.alice_keystream.as_ref()?.len();
        (bits > 0).then(|| self.free_run_steps as f64 / bits as f64)
    }
}

/// Runs the five-stage session: exchange until synchronized, check hyperchaoticity,
/// free-run both parties uncoupled, extract and compare keystreams.
///
/// Alice's side of the session comes from `alice` (her initial state and `ε_x`),
/// Bob's from `bob` (his initial state and `ε_z`). Both must share `(a, b, μ)` and
/// `step_h`.
pub fn run_protocol(
    alice: &SystemConfig,
    bob: &SystemConfig,
    channel: ChannelDelay,
    limits: &ProtocolLimits,
) -> ProtocolSession {
    let h = alice.step_h;
    let mut session = ProtocolSession {
        stage: Stage::Setup,
        history: vec![Stage::Setup],
        alice_cfg: *alice,
        bob_cfg: *bob,
        transcript: Transcript {
            z_a: DriveSignal::from_stages(h, Vec::new()),
            x_b: DriveSignal::from_stages(h, Vec::new()),
        },
        sync_verdict: SyncVerdict {
            synchronized: false,
            detect_step: None,
            terminal_error: f64::NAN,
        },
        free_run_steps: 0,
        spectrum: None,
        alice_keystream: None,
        bob_keystream: None,
        failure: None,
    };
    if alice.params != bob.params || alice.step_h != bob.step_h {
        return session.fail(FailureReason::ParameterMismatch);
    }
    let p = alice.params;
    let coupling = CouplingParams {
        eps_x: alice.coupling.eps_x,
        eps_z: bob.coupling.eps_z,
    };
    let init = CoupledState::new(alice.alice, bob.bob);

    // Stage 2: exchange z_A and x_B until the synchronization rule fires.
    session.enter(Stage::Exchanging);
    let bound = DEFAULT_DIVERGENCE_BOUND;
    let mut st = CoupledStepper::new(&init, p, coupling, h, bound, channel);
    let mut det = SyncDetector::new(limits.sync_threshold, limits.sync_hold);
    let mut z_a = Vec::new();
    let mut x_b = Vec::new();
    let mut snapshot = init;
    let err_of = |s: &CoupledState| (s.alice.x - s.bob.x).abs().max((s.alice.z - s.bob.z).abs());
    let mut last_err = err_of(&init);
    let mut run_open = false;
    let mut detected = None;
    for k in 0..=limits.max_exchange_steps {
        if k > 0 {
            if let Err(step) = st.step() {
                return session.fail(FailureReason::Diverged { step });
            }
            z_a.push(st.sent_z_a());
            x_b.push(st.sent_x_b());
        }
        let s = st.state();
        last_err = err_of(&s);
        if last_err < limits.sync_threshold {
            if !run_open {
                snapshot = s;
                run_open = true;
            }
        } else {
            run_open = false;
        }
        if let Some(d) = det.push(last_err) {
            detected = Some(d);
            break;
        }
    }
    session.sync_verdict = SyncVerdict {
        synchronized: detected.is_some(),
        detect_step: detected,
        terminal_error: last_err,
    };
    let Some(detect_step) = detected else {
        session.transcript = Transcript {
            z_a: DriveSignal::from_stages(h, z_a),
            x_b: DriveSignal::from_stages(h, x_b),
        };
        return session.fail(FailureReason::NoSync);
    };
    // Stage 3: transmission stops; nothing from the detection step on is public.
    z_a.truncate(detect_step);
    x_b.truncate(detect_step);
    session.transcript = Transcript {
        z_a: DriveSignal::from_stages(h, z_a),
        x_b: DriveSignal::from_stages(h, x_b),
    };
    session.enter(Stage::Synchronized);

    // Stage 4: both parties now run uncoupled; on the synchronization manifold the
    // uncoupled pair carries two copies of each node exponent.
    let lcfg = IntegratorConfig {
        step_h: h,
        n_steps: limits.lyapunov_steps.max(10),
        method: Default::default(),
        divergence_bound: bound,
    };
    let spectrum = free_run_spectrum(
        &p,
        &snapshot,
        &lcfg,
        &LyapunovOptions {
            band: f64::INFINITY,
            ..LyapunovOptions::default()
        },
    );
    match spectrum {
        Ok(s) => {
            let ok = is_hyperchaotic(&s, limits.hyperchaos_tol);
            session.spectrum = Some(s);
            if !ok {
                return session.fail(FailureReason::NotHyperchaotic);
            }
        }
        Err(crate::Error::Diverged { step }) => {
            return session.fail(FailureReason::Diverged { step })
        }
        Err(_) => return session.fail(FailureReason::NotHyperchaotic),
    }

    session.enter(Stage::FreeRunning);
    let mut a = snapshot.alice.to_array();
    let mut b = snapshot.bob.to_array();
    let mut scan_a = MinimaScanner::new();
    let mut scan_b = MinimaScanner::new();
    let mut ks_a = KeystreamBuilder::new(Var::ZA, limits.decimation);
    let mut ks_b = KeystreamBuilder::new(Var::ZB, limits.decimation);
    let feed = |scan: &mut MinimaScanner, ks: &mut KeystreamBuilder, v: f64| {
        if let Some((i, m)) = scan.push(v) {
            ks.push_minimum(i, m);
        }
    };
    feed(&mut scan_a, &mut ks_a, a[2]);
    feed(&mut scan_b, &mut ks_b, b[2]);
    let mut steps = 0;
    while steps < limits.free_run_steps {
        if let Some(t) = limits.target_bits {
            if ks_a.len() >= t && ks_b.len() >= t {
                break;
            }
        }
        a = free_step(&a, &p, h);
        b = free_step(&b, &p, h);
        steps += 1;
        if !(a.iter().chain(b.iter()).all(|v| v.abs() <= bound)) {
            session.free_run_steps = steps;
            return session.fail(FailureReason::Diverged {
                step: detect_step + steps,
            });
        }
        feed(&mut scan_a, &mut ks_a, a[2]);
        feed(&mut scan_b, &mut ks_b, b[2]);
    }
    session.free_run_steps = steps;
    let (ka, kb) = (ks_a.finish(), ks_b.finish());
    let matched = ka.bits == kb.bits;
    let first_difference = ka.bits.iter().zip(&kb.bits).position(|(x, y)| x != y);
    let empty = ka.is_empty();
    session.alice_keystream = Some(ka);
    session.bob_keystream = Some(kb);
    if !matched {
        return session.fail(FailureReason::KeystreamMismatch { first_difference });
    }
    if empty {
        return session.fail(FailureReason::NoKeystream);
    }
    session.enter(Stage::Ciphering);
    session
}
