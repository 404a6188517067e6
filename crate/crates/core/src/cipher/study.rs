use rayon::prelude::*;

use crate::analysis::throughput;
use crate::config::sample_system;
use crate::dynamics::{integrate, ChannelDelay, IntegratorConfig, Var, DEFAULT_STEP_H};
use crate::rng::trial_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputSummary {
    pub n_requested: usize,
    pub n_diverged: usize,
    /// Throughput of each non-diverging orbit, in trial order.
    pub per_orbit: Vec<(usize, f64)>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl ThroughputSummary {
    pub fn from_values(n_requested: usize, per_orbit: Vec<(usize, f64)>) -> Self {
        let n = per_orbit.len();
        let vals = per_orbit.iter().map(|(_, v)| *v);
        let (min, max) = vals
            .clone()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let mean = if n > 0 { vals.sum::<f64>() / n as f64 } else { f64::NAN };
        Self {
            n_requested,
            n_diverged: n_requested - n,
            per_orbit,
            mean,
            min,
            max,
        }
    }
}

/// Throughput of `z_A` over `n_orbits` random coupled sessions of `orbit_len`
/// samples each. Orbits that hit the divergence guard are left out.
pub fn throughput_study(n_orbits: usize, orbit_len: usize, seed: u64) -> ThroughputSummary {
    throughput_study_with(n_orbits, orbit_len, seed, DEFAULT_STEP_H)
}

pub fn throughput_study_with(
    n_orbits: usize,
    orbit_len: usize,
    seed: u64,
    step_h: f64,
) -> ThroughputSummary {
    let cfg = IntegratorConfig::new(step_h, orbit_len.max(2) - 1).expect("valid step");
    let per_orbit: Vec<(usize, f64)> = (0..n_orbits)
        .into_par_iter()
        .filter_map(|i| {
            let sys = sample_system(&mut trial_rng(seed, i as u64));
            let orbit = integrate(
                &sys.init(),
                &sys.params,
                &sys.coupling,
                &cfg,
                ChannelDelay::NONE,
                &[Var::ZA],
            )
            .ok()?;
            Some((i, throughput(orbit.get(Var::ZA)?)))
        })
        .collect();
    ThroughputSummary::from_values(n_orbits, per_orbit)
}
