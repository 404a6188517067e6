use super::objective::{Objective, Param, Theta};
use crate::config::SystemConfig;
use crate::dynamics::{
    eve_run, integrate_recorded, ControlParams, DriveSignal, IntegratorConfig, Var,
    DEFAULT_DIVERGENCE_BOUND,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmseConfig {
    /// Length of the comparison window in time units.
    pub horizon_t: f64,
    /// Samples excluded at the start of the window.
    pub skip_initial: usize,
    /// Samples with `|z_A|` below this are excluded.
    pub guard_eps: f64,
}

impl Default for NmseConfig {
    fn default() -> Self {
        Self {
            horizon_t: 32.0,
            skip_initial: 0,
            guard_eps: 1e-4,
        }
    }
}

impl NmseConfig {
    pub fn with_horizon(mut self, horizon_t: f64) -> Self {
        self.horizon_t = horizon_t;
        self
    }

    pub fn horizon_steps(&self, step_h: f64) -> usize {
        (self.horizon_t / step_h).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(self.horizon_t > 0.0) || !(self.guard_eps > 0.0) {
            return Err(Error::InvalidArgument(
                "horizon_t and guard_eps must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmseValue {
    pub value: f64,
    pub used: usize,
    pub guarded: usize,
}

/// Mean of `((z_A − z_E) / z_A)²` over the first `horizon_t / step_h + 1` samples,
/// skipping the first `skip_initial` and any with `|z_A| < guard_eps`.
pub fn nmse(z_a: &[f64], z_e: &[f64], step_h: f64, cfg: &NmseConfig) -> Result<NmseValue> {
    cfg.validate()?;
    if z_a.len() != z_e.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ: {} vs {}",
            z_a.len(),
            z_e.len()
        )));
    }
    let end = cfg.horizon_steps(step_h) + 1;
    if z_a.len() < end {
        return Err(Error::LengthMismatch {
            needed: end,
            available: z_a.len(),
        });
    }
    let (mut sum, mut used, mut guarded) = (0.0, 0, 0);
    for i in cfg.skip_initial.min(end)..end {
        if z_a[i].abs() < cfg.guard_eps {
            guarded += 1;
            continue;
        }
        let r = (z_a[i] - z_e[i]) / z_a[i];
        sum += r * r;
        used += 1;
    }
    if used == 0 {
        return Err(Error::AllSamplesGuarded);
    }
    Ok(NmseValue {
        value: sum / used as f64,
        used,
        guarded,
    })
}

/// What Eve holds after Stage 2: the control parameters, the observed `z_A` samples
/// and the stage samples of `x_B` she can replay.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub params: ControlParams,
    pub step_h: f64,
    /// `z_A` after each step, starting with `z_A0`.
    pub z_a: Vec<f64>,
    pub x_b: DriveSignal,
}

impl Observation {
    /// Records the first `n_steps` of a live session.
    pub fn record(sys: &SystemConfig, n_steps: usize) -> Result<Self> {
        let cfg = IntegratorConfig::new(sys.step_h, n_steps)?;
        let (orbit, drive) =
            integrate_recorded(&sys.init(), &sys.params, &sys.coupling, &cfg, &[Var::ZA])?;
        Ok(Self {
            params: sys.params,
            step_h: sys.step_h,
            z_a: orbit.get(Var::ZA).expect("recorded channel").to_vec(),
            x_b: drive,
        })
    }

    /// Builds an observation from a session transcript. The last transmitted `z_A`
    /// sample has no following step, so the observation covers one step fewer.
    pub fn from_transcript(params: ControlParams, transcript: &crate::cipher::Transcript) -> Self {
        let h = transcript.x_b.step_h();
        let z_a: Vec<f64> = transcript.z_a.samples().collect();
        let n = z_a.len().saturating_sub(1);
        Self {
            params,
            step_h: h,
            z_a,
            x_b: DriveSignal::from_stages(h, transcript.x_b.stages()[..n].to_vec()),
        }
    }

    /// Steps available for replay.
    pub fn steps(&self) -> usize {
        self.x_b.len().min(self.z_a.len().saturating_sub(1))
    }

    pub fn z_a0(&self) -> f64 {
        self.z_a[0]
    }
}

/// The NMSE as a function of `θ`, over a horizon of `n_steps` steps.
#[derive(Debug, Clone, Copy)]
pub struct NmseObjective<'a> {
    obs: &'a Observation,
    n_steps: usize,
    skip: usize,
    guard: f64,
    bound: f64,
}

impl<'a> NmseObjective<'a> {
    pub fn new(obs: &'a Observation, cfg: &NmseConfig) -> Result<Self> {
        cfg.validate()?;
        let n_steps = cfg.horizon_steps(obs.step_h);
        if n_steps < 1 || n_steps > obs.steps() {
            return Err(Error::LengthMismatch {
                needed: n_steps,
                available: obs.steps(),
            });
        }
        Ok(Self {
            obs,
            n_steps,
            skip: cfg.skip_initial,
            guard: cfg.guard_eps,
            bound: DEFAULT_DIVERGENCE_BOUND,
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Same observation, different horizon in steps.
    pub fn with_steps(&self, n_steps: usize) -> Result<Self> {
        if n_steps < 1 || n_steps > self.obs.steps() {
            return Err(Error::LengthMismatch {
                needed: n_steps,
                available: self.obs.steps(),
            });
        }
        Ok(Self { n_steps, ..*self })
    }

    #[inline]
    fn run(&self, theta: &Theta, mut visit: impl FnMut(f64)) -> bool {
        let z = &self.obs.z_a;
        let init = [theta[1], theta[2], z[0], theta[3]];
        let (skip, guard) = (self.skip, self.guard);
        let mut take = |i: usize, ze: f64| {
            if i >= skip && z[i].abs() >= guard {
                visit((z[i] - ze) / z[i]);
            }
        };
        take(0, init[2]);
        eve_run(
            init,
            &self.obs.x_b.stages()[..self.n_steps],
            &self.obs.params,
            theta[0],
            self.obs.step_h,
            self.bound,
            |i, s| take(i, s[2]),
        )
        .is_ok()
    }
}

impl Objective for NmseObjective<'_> {
    fn value(&self, theta: &Theta) -> f64 {
        let (mut sum, mut n) = (0.0, 0usize);
        let ok = self.run(theta, |r| {
            sum += r * r;
            n += 1;
        });
        if ok && n > 0 && sum.is_finite() {
            sum / n as f64
        } else {
            f64::INFINITY
        }
    }

    fn residuals(&self, theta: &Theta, out: &mut Vec<f64>) -> bool {
        out.clear();
        self.run(theta, |r| out.push(r)) && !out.is_empty()
    }

    fn pinned_z(&self) -> f64 {
        self.obs.z_a0()
    }
}

/// Objective along one axis with the other components of `base` fixed. Points where
/// the objective cannot be evaluated come back as `None`.
pub fn nmse_profile<O: Objective + ?Sized>(
    param: Param,
    grid: &[f64],
    obj: &O,
    base: &Theta,
) -> Vec<(f64, Option<f64>)> {
    grid.iter()
        .map(|&v| {
            let mut t = *base;
            t[param.index()] = v;
            let f = obj.value(&t);
            (v, f.is_finite().then_some(f))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NmseConfig {
        NmseConfig {
            horizon_t: 0.05,
            skip_initial: 0,
            guard_eps: 1e-4,
        }
    }

    #[test]
    fn identities() {
        let z = [0.3, -0.2, 0.5, 0.1, -0.4, 0.25];
        let zero = [0.0; 6];
        let twice: Vec<f64> = z.iter().map(|v| 2.0 * v).collect();
        assert_eq!(nmse(&z, &z, 0.01, &cfg()).unwrap().value, 0.0);
        assert_eq!(nmse(&z, &twice, 0.01, &cfg()).unwrap().value, 1.0);
        assert_eq!(nmse(&z, &zero, 0.01, &cfg()).unwrap().value, 1.0);
    }

    #[test]
    fn guard_and_skip() {
        let z = [0.0, 1.0, 1e-6, 2.0];
        let e = [5.0, 1.0, 7.0, 1.0];
        let c = NmseConfig {
            horizon_t: 0.03,
            skip_initial: 1,
            guard_eps: 1e-4,
        };
        let v = nmse(&z, &e, 0.01, &c).unwrap();
        assert_eq!(v.used, 2);
        assert_eq!(v.guarded, 1);
        assert_eq!(v.value, 0.125);
        assert_eq!(
            nmse(&[0.0; 4], &e, 0.01, &c),
            Err(Error::AllSamplesGuarded)
        );
    }
}
