//! Transmitter/receiver/eavesdropper vector fields and their fixed-step integration.
//!
//! Each party runs the same four-variable system
//!
//! ```text
//! ẋ = y,  ẏ = μx + x(a(x² + z²) + b z²),  ż = w,  ẇ = μz + z(a(x² + z²) + b x²)
//! ```
//!
//! Alice is driven through `x` by Bob's `x_B` with strength `ε_x`, Bob through `z` by
//! Alice's `z_A` with strength `ε_z`. Eve copies Alice's equations and replays a
//! recording of `x_B`.

mod field;
mod integrate;
mod types;

pub use field::{coupled_derivative, eve_derivative};
pub use integrate::{
    integrate, integrate_eve, integrate_recorded, rk4_step, CoupledStepper, Diverged,
    DriveSignal,
};
pub use types::{
    delay_steps_for_ms, random_initial_node, ChannelDelay, ControlParams, CoupledState,
    CouplingParams, DelayLine, IntegratorConfig, Method, NodeState, Orbit, Var,
    DEFAULT_DIVERGENCE_BOUND, DEFAULT_STEP_H, EPS_MAX, EPS_MIN,
};

pub(crate) use field::{x_driven, z_driven};
pub(crate) use integrate::{eve_run, free_step};
