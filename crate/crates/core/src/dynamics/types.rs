use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

pub const EPS_MIN: f64 = 0.1;
pub const EPS_MAX: f64 = 1.1;
pub const DEFAULT_STEP_H: f64 = 0.01;
pub const DEFAULT_DIVERGENCE_BOUND: f64 = 1e6;

fn finite(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { name, value })
    }
}

/// The shared parameters `(a, b, μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlParams {
    pub a: f64,
    pub b: f64,
    pub mu: f64,
}

impl ControlParams {
    pub fn new(a: f64, b: f64, mu: f64) -> Result<Self> {
        Ok(Self {
            a: finite("a", a)?,
            b: finite("b", b)?,
            mu: finite("mu", mu)?,
        })
    }
}

/// Coupling strengths `ε_x` (Bob → Alice) and `ε_z` (Alice → Bob).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingParams {
    pub eps_x: f64,
    pub eps_z: f64,
}

impl CouplingParams {
    /// Both strengths must lie in `[EPS_MIN, EPS_MAX]`.
    pub fn new(eps_x: f64, eps_z: f64) -> Result<Self> {
        for (name, v) in [("eps_x", eps_x), ("eps_z", eps_z)] {
            finite(name, v)?;
            if !(EPS_MIN..=EPS_MAX).contains(&v) {
                return Err(Error::OutOfRange {
                    name,
                    value: v,
                    lo: EPS_MIN,
                    hi: EPS_MAX,
                });
            }
        }
        Ok(Self { eps_x, eps_z })
    }

    /// Any finite strengths, including zero (uncoupled) and values outside the
    /// nominal range probed by attack sweeps.
    pub fn permissive(eps_x: f64, eps_z: f64) -> Result<Self> {
        Ok(Self {
            eps_x: finite("eps_x", eps_x)?,
            eps_z: finite("eps_z", eps_z)?,
        })
    }

    pub const UNCOUPLED: Self = Self {
        eps_x: 0.0,
        eps_z: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
}

impl NodeState {
    pub const ZERO: Self = Self {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        w: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self { x, y, z, w }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.z, self.w]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    /// True when every component is finite and at most `bound` in magnitude.
    pub fn within(&self, bound: f64) -> bool {
        self.to_array().iter().all(|v| v.abs() <= bound)
    }
}

/// Alice's and Bob's states side by side.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoupledState {
    pub alice: NodeState,
    pub bob: NodeState,
}

impl CoupledState {
    pub fn new(alice: NodeState, bob: NodeState) -> Self {
        Self { alice, bob }
    }

    pub fn within(&self, bound: f64) -> bool {
        self.alice.within(bound) && self.bob.within(bound)
    }

    pub fn to_array(self) -> [f64; 8] {
        let a = self.alice.to_array();
        let b = self.bob.to_array();
        [a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3]]
    }

    pub fn from_array(v: [f64; 8]) -> Self {
        Self {
            alice: NodeState::new(v[0], v[1], v[2], v[3]),
            bob: NodeState::new(v[4], v[5], v[6], v[7]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Rk4,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RK4")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub step_h: f64,
    pub n_steps: usize,
    pub method: Method,
    pub divergence_bound: f64,
}

impl IntegratorConfig {
    pub fn new(step_h: f64, n_steps: usize) -> Result<Self> {
        let cfg = Self {
            step_h,
            n_steps,
            method: Method::Rk4,
            divergence_bound: DEFAULT_DIVERGENCE_BOUND,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_divergence_bound(mut self, bound: f64) -> Self {
        self.divergence_bound = bound;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_h > 0.0 && self.step_h.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step_h must be positive, got {}",
                self.step_h
            )));
        }
        if self.n_steps < 1 {
            return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
        }
        if !(self.divergence_bound > 0.0) {
            return Err(Error::InvalidArgument(
                "divergence_bound must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Converts a channel delay in milliseconds to whole integration steps, taking one
/// model time unit as one second.
pub fn delay_steps_for_ms(delay_ms: f64, step_h: f64) -> usize {
    (delay_ms * 1e-3 / step_h).round().max(0.0) as usize
}

/// Delays on the two exchanged signals, in steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChannelDelay {
    /// Delay on `x_B` as received by Alice.
    pub x_b: usize,
    /// Delay on `z_A` as received by Bob.
    pub z_a: usize,
}

impl ChannelDelay {
    pub const NONE: Self = Self { x_b: 0, z_a: 0 };

    pub fn symmetric(steps: usize) -> Self {
        Self { x_b: steps, z_a: steps }
    }
}

/// FIFO of per-step signal samples.
///
/// A sample holds the sender's value at each of the four RK4 stages of one step, so a
/// receiver `d` steps behind sees exactly what it would have seen live `d` steps
/// earlier. The buffer always holds `delay_steps` entries. Delay 0 is pass-through:
/// the integrator then feeds the live stage values directly.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine {
    delay_steps: usize,
    buffer: VecDeque<[f64; 4]>,
}

impl DelayLine {
    /// A line primed with `hold` for its first `delay_steps` outputs.
    pub fn primed(delay_steps: usize, hold: f64) -> Self {
        Self {
            delay_steps,
            buffer: std::iter::repeat([hold; 4]).take(delay_steps).collect(),
        }
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn is_passthrough(&self) -> bool {
        self.delay_steps == 0
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    /// Pushes this step's sample and returns the one sent `delay_steps` ago.
    pub fn exchange(&mut self, sample: [f64; 4]) -> [f64; 4] {
        match self.buffer.pop_front() {
            Some(out) => {
                self.buffer.push_back(sample);
                out
            }
            None => sample,
        }
    }

    /// The sample that will be delivered during the next step.
    pub fn peek(&self) -> Option<[f64; 4]> {
        self.buffer.front().copied()
    }
}

/// State variables that can be recorded into an [`Orbit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    XA,
    YA,
    ZA,
    WA,
    XB,
    YB,
    ZB,
    WB,
    XE,
    YE,
    ZE,
    WE,
}

impl Var {
    pub const ALICE: [Var; 4] = [Var::XA, Var::YA, Var::ZA, Var::WA];
    pub const BOB: [Var; 4] = [Var::XB, Var::YB, Var::ZB, Var::WB];
    pub const COUPLED: [Var; 8] = [
        Var::XA,
        Var::YA,
        Var::ZA,
        Var::WA,
        Var::XB,
        Var::YB,
        Var::ZB,
        Var::WB,
    ];
    pub const EVE: [Var; 4] = [Var::XE, Var::YE, Var::ZE, Var::WE];

    pub fn name(self) -> &'static str {
        match self {
            Var::XA => "x_A",
            Var::YA => "y_A",
            Var::ZA => "z_A",
            Var::WA => "w_A",
            Var::XB => "x_B",
            Var::YB => "y_B",
            Var::ZB => "z_B",
            Var::WB => "w_B",
            Var::XE => "x_E",
            Var::YE => "y_E",
            Var::ZE => "z_E",
            Var::WE => "w_E",
        }
    }

    /// Position in the 8-component coupled state, or in the 4-component Eve state.
    pub(crate) fn index(self) -> usize {
        self as usize % 8
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Var {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Var::COUPLED.as_slice(), Var::EVE.as_slice()]
            .concat()
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown channel {s:?}")))
    }
}

/// Fixed-step time series of selected variables. Sample `i` is the state after `i`
/// steps, so a run of `n` steps has `n + 1` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    pub step_h: f64,
    channels: Vec<(Var, Vec<f64>)>,
    /// Step at which the divergence guard tripped, if it did.
    pub diverged_at: Option<usize>,
}

impl Orbit {
    pub fn new(step_h: f64, vars: &[Var]) -> Self {
        Self {
            step_h,
            channels: vars.iter().map(|&v| (v, Vec::new())).collect(),
            diverged_at: None,
        }
    }

    pub(crate) fn with_capacity(step_h: f64, vars: &[Var], cap: usize) -> Self {
        Self {
            step_h,
            channels: vars.iter().map(|&v| (v, Vec::with_capacity(cap))).collect(),
            diverged_at: None,
        }
    }

    pub(crate) fn push_coupled(&mut self, s: &[f64; 8]) {
        for (v, series) in &mut self.channels {
            series.push(s[v.index()]);
        }
    }

    pub(crate) fn push_node(&mut self, s: &[f64; 4]) {
        for (v, series) in &mut self.channels {
            series.push(s[v.index() % 4]);
        }
    }

    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.channels
            .iter()
            .find(|(v, _)| *v == var)
            .map(|(_, s)| s.as_slice())
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.channels.iter().map(|(v, _)| *v)
    }

    pub fn channels(&self) -> &[(Var, Vec<f64>)] {
        &self.channels
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |(_, s)| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Draws each component uniformly from `[-0.5, 0.5]`.
pub fn random_initial_node<R: Rng + ?Sized>(rng: &mut R) -> NodeState {
    let mut draw = || rng.gen_range(-0.5..=0.5);
    NodeState::new(draw(), draw(), draw(), draw())
}
