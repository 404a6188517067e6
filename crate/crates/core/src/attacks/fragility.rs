use rayon::prelude::*;

use crate::analysis::{run_until_sync, SyncVerdict, DEFAULT_SYNC_HOLD, DEFAULT_SYNC_THRESHOLD};
use crate::config::SystemConfig;
use crate::dynamics::{random_initial_node, ChannelDelay, CoupledState, NodeState};
use crate::rng::trial_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FragilityOptions {
    pub threshold: f64,
    pub hold: usize,
    /// Step budget per trial.
    pub max_steps: usize,
}

impl Default for FragilityOptions {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_SYNC_THRESHOLD,
            hold: DEFAULT_SYNC_HOLD,
            max_steps: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragilityReport {
    pub n_trials: usize,
    pub failures: usize,
    pub rate: f64,
    /// Bob's redrawn initial state and the verdict, in trial order.
    pub trials: Vec<(NodeState, SyncVerdict)>,
}

/// Redraws Bob's initial conditions `n_trials` times, everything else fixed, and
/// counts the sessions that fail to synchronize. Trial `i` uses stream `i` of `seed`.
pub fn sync_fragility_study(
    base: &SystemConfig,
    n_trials: usize,
    seed: u64,
    opts: &FragilityOptions,
) -> FragilityReport {
    let trials: Vec<(NodeState, SyncVerdict)> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let bob = random_initial_node(&mut trial_rng(seed, i as u64));
            let v = run_until_sync(
                &CoupledState::new(base.alice, bob),
                &base.params,
                &base.coupling,
                base.step_h,
                ChannelDelay::NONE,
                opts.threshold,
                opts.hold,
                opts.max_steps,
            );
            (bob, v)
        })
        .collect();
    let failures = trials.iter().filter(|(_, v)| !v.synchronized).count();
    FragilityReport {
        n_trials,
        failures,
        rate: if n_trials > 0 { failures as f64 / n_trials as f64 } else { 0.0 },
        trials,
    }
}
