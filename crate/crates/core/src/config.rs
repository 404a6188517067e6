//! `key = value` configuration files.
//!
//! ```text
//! # Fig. 4 session
//! a = -0.815215556019668
//! mu = 0.697158139176817
//! ...
//! ```
//!
//! Parameters, couplings and all eight initial conditions are required. `step_h`,
//! `n_steps`, `delay_ms` and `seed` fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;

use crate::dynamics::{
    delay_steps_for_ms, random_initial_node, ChannelDelay, ControlParams, CoupledState,
    CouplingParams, IntegratorConfig, NodeState, DEFAULT_STEP_H, EPS_MAX, EPS_MIN,
};
use crate::error::{Error, Result};

pub const DEFAULT_N_STEPS: usize = 100_000;

/// Everything needed to reproduce one coupled session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub params: ControlParams,
    pub coupling: CouplingParams,
    pub alice: NodeState,
    pub bob: NodeState,
    pub step_h: f64,
    pub n_steps: usize,
    pub delay_ms: f64,
    pub seed: u64,
}

impl SystemConfig {
    pub fn new(
        params: ControlParams,
        coupling: CouplingParams,
        alice: NodeState,
        bob: NodeState,
    ) -> Self {
        Self {
            params,
            coupling,
            alice,
            bob,
            step_h: DEFAULT_STEP_H,
            n_steps: DEFAULT_N_STEPS,
            delay_ms: 0.0,
            seed: 0,
        }
    }

    pub fn init(&self) -> CoupledState {
        CoupledState::new(self.alice, self.bob)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig> {
        IntegratorConfig::new(self.step_h, self.n_steps)
    }

    pub fn channel_delay(&self) -> ChannelDelay {
        ChannelDelay::symmetric(delay_steps_for_ms(self.delay_ms, self.step_h))
    }
}

/// Sampling box for random control parameters: `a ∈ [-1.1, -0.4]`, `b ∈ [0.1, 1.2]`,
/// `μ ∈ [0.5, 1.3]`.
pub const A_RANGE: (f64, f64) = (-1.1, -0.4);
pub const B_RANGE: (f64, f64) = (0.1, 1.2);
pub const MU_RANGE: (f64, f64) = (0.5, 1.3);

pub fn sample_control_params<R: Rng + ?Sized>(rng: &mut R) -> ControlParams {
    ControlParams {
        a: rng.gen_range(A_RANGE.0..=A_RANGE.1),
        b: rng.gen_range(B_RANGE.0..=B_RANGE.1),
        mu: rng.gen_range(MU_RANGE.0..=MU_RANGE.1),
    }
}

/// Both strengths uniform in `[EPS_MIN, EPS_MAX]`.
pub fn sample_coupling<R: Rng + ?Sized>(rng: &mut R) -> CouplingParams {
    CouplingParams {
        eps_x: rng.gen_range(EPS_MIN..=EPS_MAX),
        eps_z: rng.gen_range(EPS_MIN..=EPS_MAX),
    }
}

/// A fully random session: sampled parameters and couplings, uniform initial
/// conditions for both parties.
pub fn sample_system<R: Rng + ?Sized>(rng: &mut R) -> SystemConfig {
    let params = sample_control_params(rng);
    let coupling = sample_coupling(rng);
    let alice = random_initial_node(rng);
    let bob = random_initial_node(rng);
    SystemConfig::new(params, coupling, alice, bob)
}

/// Formats with 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

const KEYS: [&str; 17] = [
    "a", "b", "mu", "eps_x", "eps_z", "x_A0", "y_A0", "z_A0", "w_A0", "x_B0", "y_B0", "z_B0",
    "w_B0", "step_h", "n_steps", "delay_ms", "seed",
];

/// Renders a configuration that [`parse_config`] reads back exactly.
pub fn emit_config(c: &SystemConfig) -> String {
    let mut out = String::new();
    let reals = [
        ("a", c.params.a),
        ("b", c.params.b),
        ("mu", c.params.mu),
        ("eps_x", c.coupling.eps_x),
        ("eps_z", c.coupling.eps_z),
        ("x_A0", c.alice.x),
        ("y_A0", c.alice.y),
        ("z_A0", c.alice.z),
        ("w_A0", c.alice.w),
        ("x_B0", c.bob.x),
        ("y_B0", c.bob.y),
        ("z_B0", c.bob.z),
        ("w_B0", c.bob.w),
        ("step_h", c.step_h),
    ];
    for (k, v) in reals {
        let _ = writeln!(out, "{k} = {}", fmt_f64(v));
    }
    let _ = writeln!(out, "n_steps = {}", c.n_steps);
    let _ = writeln!(out, "delay_ms = {}", fmt_f64(c.delay_ms));
    let _ = writeln!(out, "seed = {}", c.seed);
    out
}

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Reads `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let mut entries: BTreeMap<&'static str, Entry> = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let key_col = body.len() - body.trim_start().len() + 1;
        let Some(eq) = body.find('=') else {
            return Err(parse_err(line, key_col, "expected `key = value`"));
        };
        let key = body[..eq].trim();
        let value_part = &body[eq + 1..];
        let value_col = eq + 2 + (value_part.len() - value_part.trim_start().len());
        let value = value_part.trim();
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(parse_err(line, key_col, format!("unknown key `{key}`")));
        };
        if value.is_empty() {
            return Err(parse_err(line, value_col, format!("missing value for `{key}`")));
        }
        if entries.contains_key(known) {
            return Err(parse_err(line, key_col, format!("duplicate key `{key}`")));
        }
        entries.insert(
            known,
            Entry {
                value: value.to_string(),
                line,
                column: value_col,
            },
        );
    }
    if entries.is_empty() {
        return Err(parse_err(1, 1, "empty configuration"));
    }

    let end_line = text.lines().count().max(1);
    let real = |key: &'static str| -> Result<Option<f64>> {
        entries
            .get(key)
            .map(|e| {
                e.value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_err(e.line, e.column, format!("`{key}` is not a finite decimal"))
                    })
            })
            .transpose()
    };
    let required = |key: &'static str| -> Result<f64> {
        real(key)?.ok_or_else(|| parse_err(end_line, 1, format!("missing key `{key}`")))
    };
    let integer = |key: &'static str| -> Result<Option<u64>> {
        entries
            .get(key)
            .map(|e| {
                e.value.parse::<u64>().map_err(|_| {
                    parse_err(e.line, e.column, format!("`{key}` is not a non-negative integer"))
                })
            })
            .transpose()
    };
    let at = |key: &'static str, err: Error| -> Error {
        match (entries.get(key), err) {
            (Some(e), err) => parse_err(e.line, e.column, err.to_string()),
            (None, err) => err,
        }
    };

    let params = ControlParams::new(required("a")?, required("b")?, required("mu")?)?;
    let (ex, ez) = (required("eps_x")?, required("eps_z")?);
    let coupling = CouplingParams::new(ex, ez).map_err(|e| match e {
        Error::OutOfRange { name, .. } => at(name, e),
        e => e,
    })?;
    let node = |s: &str| -> Result<NodeState> {
        let k = |v: &str| -> &'static str {
            let name = format!("{v}_{s}0");
            KEYS.iter().find(|k| **k == name).copied().unwrap_or("a")
        };
        Ok(NodeState::new(
            required(k("x"))?,
            required(k("y"))?,
            required(k("z"))?,
            required(k("w"))?,
        ))
    };
    let mut cfg = SystemConfig::new(params, coupling, node("A")?, node("B")?);
    if let Some(h) = real("step_h")? {
        if !(h > 0.0) {
            return Err(at("step_h", Error::InvalidArgument("step_h must be positive".into())));
        }
        cfg.step_h = h;
    }
    if let Some(n) = integer("n_steps")? {
        if n < 1 {
            return Err(at("n_steps", Error::InvalidArgument("n_steps must be at least 1".into())));
        }
        cfg.n_steps = n as usize;
    }
    if let Some(d) = real("delay_ms")? {
        if d < 0.0 {
            return Err(at("delay_ms", Error::InvalidArgument("delay_ms must be non-negative".into())));
        }
        cfg.delay_ms = d;
    }
    if let Some(s) = integer("seed")? {
        cfg.seed = s;
    }
    Ok(cfg)
}
