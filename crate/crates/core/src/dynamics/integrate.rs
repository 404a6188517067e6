use std::fmt;

use super::field::{free_field, x_driven, z_driven};
use super::types::{
    ChannelDelay, ControlParams, CoupledState, CouplingParams, DelayLine, IntegratorConfig,
    NodeState, Orbit, Var,
};
use crate::error::{Error, Result};

const C: [f64; 4] = [0.0, 0.5, 0.5, 1.0];

#[inline(always)]
fn stage<const N: usize>(s: &[f64; N], k: &[f64; N], ch: f64) -> [f64; N] {
    let mut t = *s;
    for j in 0..N {
        t[j] += ch * k[j];
    }
    t
}

#[inline(always)]
fn combine<const N: usize>(s: &[f64; N], k: &[[f64; N]; 4], h: f64) -> [f64; N] {
    let mut out = *s;
    for j in 0..N {
        out[j] += h / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
    }
    out
}

#[inline(always)]
fn within<const N: usize>(s: &[f64; N], bound: f64) -> bool {
    s.iter().all(|v| v.abs() <= bound)
}

/// One classical RK4 step of an autonomous system. The coupled and Eve integrators
/// share its stage arithmetic.
#[inline]
pub fn rk4_step<const N: usize>(
    s: &[f64; N],
    h: f64,
    mut f: impl FnMut(&[f64; N]) -> [f64; N],
) -> [f64; N] {
    let mut k = [[0.0; N]; 4];
    for st in 0..4 {
        let t = if st == 0 { *s } else { stage(s, &k[st - 1], C[st] * h) };
        k[st] = f(&t);
    }
    combine(s, &k, h)
}

/// One RK4 step of an uncoupled node.
#[inline]
pub(crate) fn free_step(s: &[f64; 4], p: &ControlParams, h: f64) -> [f64; 4] {
    rk4_step(s, h, |t| free_field(t, p))
}

/// Recorded drive signal: the sender's value at each RK4 stage of each step.
///
/// A receiver replaying these stage values reproduces the live coupled integration
/// bit for bit. Plain per-step samples are held constant across a step.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveSignal {
    step_h: f64,
    stages: Vec<[f64; 4]>,
}

impl DriveSignal {
    pub fn from_stages(step_h: f64, stages: Vec<[f64; 4]>) -> Self {
        Self { step_h, stages }
    }

    /// Zero-order hold of one sample per step.
    pub fn from_samples(step_h: f64, samples: &[f64]) -> Self {
        Self {
            step_h,
            stages: samples.iter().map(|&v| [v; 4]).collect(),
        }
    }

    pub fn step_h(&self) -> f64 {
        self.step_h
    }

    /// Number of steps covered.
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn stages(&self) -> &[[f64; 4]] {
        &self.stages
    }

    /// Sender value at the start of each step.
    pub fn samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.stages.iter().map(|s| s[0])
    }
}

/// Steps the coupled pair one RK4 step at a time, exchanging `x_B` and `z_A` through
/// the configured delay lines.
#[derive(Debug, Clone)]
pub struct CoupledStepper {
    a: [f64; 4],
    b: [f64; 4],
    p: ControlParams,
    c: CouplingParams,
    h: f64,
    bound: f64,
    to_alice: DelayLine,
    to_bob: DelayLine,
    steps: usize,
    sent_x_b: [f64; 4],
    sent_z_a: [f64; 4],
}

impl CoupledStepper {
    /// Delay lines are primed by holding each sender's initial value.
    pub fn new(
        init: &CoupledState,
        p: ControlParams,
        c: CouplingParams,
        step_h: f64,
        divergence_bound: f64,
        delay: ChannelDelay,
    ) -> Self {
        Self {
            a: init.alice.to_array(),
            b: init.bob.to_array(),
            p,
            c,
            h: step_h,
            bound: divergence_bound,
            to_alice: DelayLine::primed(delay.x_b, init.bob.x),
            to_bob: DelayLine::primed(delay.z_a, init.alice.z),
            steps: 0,
            sent_x_b: [init.bob.x; 4],
            sent_z_a: [init.alice.z; 4],
        }
    }

    /// Advances one step. On divergence returns the index of the offending sample.
    #[inline]
    pub fn step(&mut self) -> std::result::Result<(), usize> {
        let (a, b, p, c, h) = (&self.a, &self.b, &self.p, &self.c, self.h);
        let x_in = self.to_alice.peek();
        let z_in = self.to_bob.peek();
        let mut ka = [[0.0; 4]; 4];
        let mut kb = [[0.0; 4]; 4];
        let mut xs = [0.0; 4];
        let mut zs = [0.0; 4];
        for st in 0..4 {
            let (ta, tb) = if st == 0 {
                (*a, *b)
            } else {
                (stage(a, &ka[st - 1], C[st] * h), stage(b, &kb[st - 1], C[st] * h))
            };
            xs[st] = tb[0];
            zs[st] = ta[2];
            let xi = x_in.map_or(tb[0], |v| v[st]);
            let zi = z_in.map_or(ta[2], |v| v[st]);
            ka[st] = x_driven(&ta, p, c.eps_x, xi);
            kb[st] = z_driven(&tb, p, c.eps_z, zi);
        }
        self.a = combine(a, &ka, h);
        self.b = combine(b, &kb, h);
        self.to_alice.exchange(xs);
        self.to_bob.exchange(zs);
        self.sent_x_b = xs;
        self.sent_z_a = zs;
        self.steps += 1;
        if within(&self.a, self.bound) && within(&self.b, self.bound) {
            Ok(())
        } else {
            Err(self.steps)
        }
    }

    pub fn state(&self) -> CoupledState {
        CoupledState::new(NodeState::from_array(self.a), NodeState::from_array(self.b))
    }

    pub fn state_array(&self) -> [f64; 8] {
        let (a, b) = (self.a, self.b);
        [a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]]
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `x_B` stage values Bob emitted during the last step.
    pub fn sent_x_b(&self) -> [f64; 4] {
        self.sent_x_b
    }

    /// `z_A` stage values Alice emitted during the last step.
    pub fn sent_z_a(&self) -> [f64; 4] {
        self.sent_z_a
    }
}

/// Divergence during integration, with the orbit recorded up to that point.
#[derive(Debug, Clone, PartialEq)]
pub struct Diverged {
    pub step: usize,
    pub partial: Orbit,
}

impl fmt::Display for Diverged {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "state exceeded the divergence bound at step {}", self.step)
    }
}

impl std::error::Error for Diverged {}

impl From<Diverged> for Error {
    fn from(d: Diverged) -> Self {
        Error::Diverged { step: d.step }
    }
}

impl From<Box<Diverged>> for Error {
    fn from(d: Box<Diverged>) -> Self {
        Error::Diverged { step: d.step }
    }
}

fn run_coupled(
    init: &CoupledState,
    p: &ControlParams,
    c: &CouplingParams,
    cfg: &IntegratorConfig,
    delay: ChannelDelay,
    vars: &[Var],
    mut drive: Option<&mut Vec<[f64; 4]>>,
) -> std::result::Result<Orbit, Box<Diverged>> {
    let mut orbit = Orbit::with_capacity(cfg.step_h, vars, cfg.n_steps + 1);
    orbit.push_coupled(&init.to_array());
    if !init.within(cfg.divergence_bound) {
        orbit.diverged_at = Some(0);
        return Err(Box::new(Diverged { step: 0, partial: orbit }));
    }
    let mut st = CoupledStepper::new(init, *p, *c, cfg.step_h, cfg.divergence_bound, delay);
    for _ in 0..cfg.n_steps {
        let res = st.step();
        if let Some(d) = drive.as_deref_mut() {
            d.push(st.sent_x_b());
        }
        orbit.push_coupled(&st.state_array());
        if let Err(step) = res {
            orbit.diverged_at = Some(step);
            return Err(Box::new(Diverged { step, partial: orbit }));
        }
    }
    Ok(orbit)
}

/// Integrates the coupled pair for `cfg.n_steps` RK4 steps and records `vars`.
///
/// With zero delay the exchanged signals are evaluated live at every RK4 stage. A
/// delay of `d` steps feeds each receiver the stage values its peer emitted `d` steps
/// earlier; before that the peer's initial value is held.
pub fn integrate(
    init: &CoupledState,
    p: &ControlParams,
    c: &CouplingParams,
    cfg: &IntegratorConfig,
    delay: ChannelDelay,
    vars: &[Var],
) -> std::result::Result<Orbit, Box<Diverged>> {
    run_coupled(init, p, c, cfg, delay, vars, None)
}

/// As [`integrate`], also returning the `x_B` signal Alice received, as Eve would
/// record it off the channel.
pub fn integrate_recorded(
    init: &CoupledState,
    p: &ControlParams,
    c: &CouplingParams,
    cfg: &IntegratorConfig,
    vars: &[Var],
) -> std::result::Result<(Orbit, DriveSignal), Box<Diverged>> {
    let mut drive = Vec::with_capacity(cfg.n_steps);
    let orbit = run_coupled(init, p, c, cfg, ChannelDelay::NONE, vars, Some(&mut drive))?;
    Ok((orbit, DriveSignal::from_stages(cfg.step_h, drive)))
}

/// Runs Eve's system over `drive.len()` steps, calling `sink(i, state)` after step `i`.
#[inline]
pub(crate) fn eve_run(
    init: [f64; 4],
    drive: &[[f64; 4]],
    p: &ControlParams,
    eps: f64,
    h: f64,
    bound: f64,
    mut sink: impl FnMut(usize, &[f64; 4]),
) -> std::result::Result<(), usize> {
    let mut s = init;
    for (i, inp) in drive.iter().enumerate() {
        let mut st = 0;
        s = rk4_step(&s, h, |t| {
            let d = x_driven(t, p, eps, inp[st]);
            st += 1;
            d
        });
        if !within(&s, bound) {
            return Err(i + 1);
        }
        sink(i + 1, &s);
    }
    Ok(())
}

/// Integrates Eve's copy of Alice's system driven by a recording of `x_B`.
pub fn integrate_eve(
    init_e: &NodeState,
    drive: &DriveSignal,
    p: &ControlParams,
    eps_ex: f64,
    cfg: &IntegratorConfig,
) -> Result<Orbit> {
    cfg.validate()?;
    if drive.len() < cfg.n_steps {
        return Err(Error::LengthMismatch {
            needed: cfg.n_steps,
            available: drive.len(),
        });
    }
    if (drive.step_h() - cfg.step_h).abs() > 1e-12 * cfg.step_h {
        return Err(Error::InvalidArgument(format!(
            "recording spacing {} differs from step_h {}",
            drive.step_h(),
            cfg.step_h
        )));
    }
    let mut orbit = Orbit::with_capacity(cfg.step_h, &Var::EVE, cfg.n_steps + 1);
    let s0 = init_e.to_array();
    orbit.push_node(&s0);
    if !within(&s0, cfg.divergence_bound) {
        return Err(Error::Diverged { step: 0 });
    }
    eve_run(
        s0,
        &drive.stages()[..cfg.n_steps],
        p,
        eps_ex,
        cfg.step_h,
        cfg.divergence_bound,
        |_, s| orbit.push_node(s),
    )
    .map_err(|step| Error::Diverged { step })?;
    Ok(orbit)
}
