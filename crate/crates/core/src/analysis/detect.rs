use super::cwt::{morlet_cwt_with, period_scales, CwtOptions, DEFAULT_OMEGA0};
use crate::dynamics::{
    ChannelDelay, ControlParams, CoupledState, CoupledStepper, CouplingParams,
    DEFAULT_DIVERGENCE_BOUND,
};
use crate::error::{Error, Result};

pub const DEFAULT_SYNC_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_SYNC_HOLD: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyncVerdict {
    pub synchronized: bool,
    /// First step of the run of `hold` consecutive steps under the threshold.
    pub detect_step: Option<usize>,
    /// Largest error over the final 1% of steps.
    pub terminal_error: f64,
}

/// Incremental synchronization detector fed one error sample per step.
#[derive(Debug, Clone)]
pub struct SyncDetector {
    threshold: f64,
    hold: usize,
    run_start: Option<usize>,
    index: usize,
    detected: Option<usize>,
}

impl SyncDetector {
    pub fn new(threshold: f64, hold: usize) -> Self {
        Self {
            threshold,
            hold: hold.max(1),
            run_start: None,
            index: 0,
            detected: None,
        }
    }

    /// Feeds the error of the next step; returns the detection step once it fires.
    #[inline]
    pub fn push(&mut self, err: f64) -> Option<usize> {
        if self.detected.is_none() {
            if err < self.threshold {
                let start = *self.run_start.get_or_insert(self.index);
                if self.index + 1 - start >= self.hold {
                    self.detected = Some(start);
                }
            } else {
                self.run_start = None;
            }
        }
        self.index += 1;
        self.detected
    }

    pub fn detected(&self) -> Option<usize> {
        self.detected
    }
}

/// Synchronized at the first step where `max(|x_A − x_B|, |z_A − z_B|) < threshold`
/// holds for `hold` consecutive steps.
pub fn detect_synchronization(
    x_a: &[f64],
    x_b: &[f64],
    z_a: &[f64],
    z_b: &[f64],
    threshold: f64,
    hold: usize,
) -> Result<SyncVerdict> {
    let n = x_a.len();
    if x_b.len() != n || z_a.len() != n || z_b.len() != n {
        return Err(Error::InvalidArgument(
            "synchronization series differ in length".into(),
        ));
    }
    if !(threshold > 0.0) || hold < 1 {
        return Err(Error::InvalidArgument(
            "threshold must be positive and hold at least 1".into(),
        ));
    }
    let err = |i: usize| (x_a[i] - x_b[i]).abs().max((z_a[i] - z_b[i]).abs());
    let mut det = SyncDetector::new(threshold, hold);
    for i in 0..n {
        if det.push(err(i)).is_some() {
            break;
        }
    }
    let tail = (n / 100).max(1).min(n);
    let terminal_error = (n - tail..n).map(err).fold(0.0, f64::max);
    let detect_step = det.detected();
    Ok(SyncVerdict {
        synchronized: detect_step.is_some(),
        detect_step,
        terminal_error,
    })
}

/// Integrates the coupled pair until the synchronization rule fires or `max_steps`
/// run out, without storing the orbit. A diverging run counts as not synchronized.
/// `terminal_error` is the error at the last step taken.
#[allow(clippy::too_many_arguments)]
pub fn run_until_sync(
    init: &CoupledState,
    p: &ControlParams,
    c: &CouplingParams,
    step_h: f64,
    delay: ChannelDelay,
    threshold: f64,
    hold: usize,
    max_steps: usize,
) -> SyncVerdict {
    let mut st = CoupledStepper::new(init, *p, *c, step_h, DEFAULT_DIVERGENCE_BOUND, delay);
    let mut det = SyncDetector::new(threshold, hold);
    let err = |s: &[f64; 8]| (s[0] - s[4]).abs().max((s[2] - s[6]).abs());
    let mut e = err(&init.to_array());
    let mut detected = det.push(e);
    for _ in 0..max_steps {
        if detected.is_some() {
            break;
        }
        if st.step().is_err() {
            return SyncVerdict {
                synchronized: false,
                detect_step: None,
                terminal_error: f64::INFINITY,
            };
        }
        e = err(&st.state_array());
        detected = det.push(e);
    }
    SyncVerdict {
        synchronized: detected.is_some(),
        detect_step: detected,
        terminal_error: e,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOptions {
    pub step_h: f64,
    pub scales: Vec<f64>,
    /// Concentration above which a window counts as collapsed.
    pub threshold: f64,
    /// Consecutive collapsed windows required.
    pub persist: usize,
    pub cwt: CwtOptions,
}

impl CollapseOptions {
    /// Periods from 1 to 128 time units at three voices per octave.
    pub fn new(step_h: f64) -> Self {
        Self {
            step_h,
            scales: period_scales(1.0, 128.0, 3, DEFAULT_OMEGA0),
            threshold: 0.9,
            persist: 5,
            cwt: CwtOptions::default(),
        }
    }
}

/// Mean spectral concentration of each full window: the share of a scalogram column's
/// energy in its three strongest scales, averaged over the columns of the window.
pub fn concentration_profile(
    series: &[f64],
    window: usize,
    opts: &CollapseOptions,
) -> Result<Vec<(usize, f64)>> {
    if window < 1 {
        return Err(Error::InvalidArgument("window must be positive".into()));
    }
    let sg = morlet_cwt_with(series, &opts.scales, opts.step_h, &opts.cwt)?;
    let n_windows = series.len() / window;
    let mut acc = vec![(0.0, 0usize); n_windows];
    let mut col = vec![0.0; sg.scales.len()];
    for (j, &t) in sg.times.iter().enumerate() {
        let w = t / window;
        if w >= n_windows {
            break;
        }
        for (i, c) in col.iter_mut().enumerate() {
            *c = sg.magnitude[i][j] * sg.magnitude[i][j];
        }
        let total: f64 = col.iter().sum();
        col.sort_by(|a, b| b.total_cmp(a));
        let conc = if total > 0.0 {
            col.iter().take(3).sum::<f64>() / total
        } else {
            1.0
        };
        acc[w].0 += conc;
        acc[w].1 += 1;
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .map(|(w, (s, c))| (w * window, if c > 0 { s / c as f64 } else { 1.0 }))
        .collect())
}

/// First sample of the first run of `persist` consecutive windows whose concentration
/// exceeds the threshold. An all-zero series counts as collapsed from the start.
pub fn detect_collapse(
    series: &[f64],
    window: usize,
    opts: &CollapseOptions,
) -> Result<Option<usize>> {
    let profile = concentration_profile(series, window, opts)?;
    let persist = opts.persist.max(1);
    let mut run = 0;
    for (k, &(_, conc)) in profile.iter().enumerate() {
        if conc > opts.threshold {
            run += 1;
            if run == persist {
                return Ok(Some(profile[k + 1 - persist].0));
            }
        } else {
            run = 0;
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_series_sync_at_zero() {
        let s: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let v = detect_synchronization(&s, &s, &s, &s, 1e-6, 10).unwrap();
        assert!(v.synchronized);
        assert_eq!(v.detect_step, Some(0));
        assert_eq!(v.terminal_error, 0.0);
    }

    #[test]
    fn detector_requires_hold() {
        let mut d = SyncDetector::new(1.0, 3);
        let errs = [0.5, 0.5, 2.0, 0.5, 0.5, 0.5, 0.5];
        let got: Vec<Option<usize>> = errs.iter().map(|&e| d.push(e)).collect();
        assert_eq!(got[4], None);
        assert_eq!(got[5], Some(3));
        assert_eq!(got[6], Some(3));
    }

    #[test]
    fn zeros_collapse_at_first_window() {
        let z = vec![0.0; 4000];
        let opts = CollapseOptions::new(0.1);
        assert_eq!(detect_collapse(&z, 500, &opts).unwrap(), Some(0));
    }
}
