use crate::dynamics::{
    x_driven, z_driven, ControlParams, CoupledState, CouplingParams, IntegratorConfig,
};
use crate::error::{Error, Result};

/// Exponents in descending order, in units of 1/time.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSpectrum {
    pub exponents: Vec<f64>,
    pub n_renorm_steps: usize,
    pub transient_discard: usize,
}

impl LyapunovSpectrum {
    pub fn largest(&self) -> f64 {
        self.exponents.first().copied().unwrap_or(f64::NAN)
    }

    pub fn sum(&self) -> f64 {
        self.exponents.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovOptions {
    /// Steps between Gram–Schmidt re-orthonormalizations.
    pub renorm_interval: usize,
    /// Fraction of the run discarded before averaging.
    pub transient_fraction: f64,
    /// Largest allowed spread of any running average over the final 10% of the run.
    pub band: f64,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        Self {
            renorm_interval: 10,
            transient_fraction: 0.1,
            band: 0.05,
        }
    }
}

/// Benettin tangent-space method for `ẋ = f(x)` with tangent map `v ↦ J(x)v`.
///
/// State and tangent vectors are advanced together by RK4; the tangent basis is
/// re-orthonormalized every `renorm_interval` steps.
pub fn benettin<const N: usize>(
    x0: [f64; N],
    step_h: f64,
    n_steps: usize,
    opts: &LyapunovOptions,
    bound: f64,
    f: impl Fn(&[f64; N]) -> [f64; N],
    tangent: impl Fn(&[f64; N], &[f64; N]) -> [f64; N],
) -> Result<LyapunovSpectrum> {
    if opts.renorm_interval == 0 || n_steps == 0 {
        return Err(Error::InvalidArgument(
            "renorm_interval and n_steps must be positive".into(),
        ));
    }
    let h = step_h;
    let discard = (opts.transient_fraction * n_steps as f64).round() as usize;
    let tail_start = n_steps - n_steps / 10;

    let mut x = x0;
    let mut q = [[0.0; N]; N];
    for (i, col) in q.iter_mut().enumerate() {
        col[i] = 1.0;
    }
    let mut sums = [0.0; N];
    let mut t_acc = 0.0;
    let mut renorms = 0;
    let mut last_renorm = 0;
    let mut lo = [f64::INFINITY; N];
    let mut hi = [f64::NEG_INFINITY; N];

    let mut kx = [[0.0; N]; 4];
    let mut kq = [[[0.0; N]; N]; 4];
    for step in 1..=n_steps {
        for st in 0..4 {
            let c = [0.0, 0.5, 0.5, 1.0][st] * h;
            let mut xs = x;
            if st > 0 {
                for j in 0..N {
                    xs[j] += c * kx[st - 1][j];
                }
            }
            kx[st] = f(&xs);
            for col in 0..N {
                let mut v = q[col];
                if st > 0 {
                    for j in 0..N {
                        v[j] += c * kq[st - 1][col][j];
                    }
                }
                kq[st][col] = tangent(&xs, &v);
            }
        }
        for j in 0..N {
            x[j] += h / 6.0 * (kx[0][j] + 2.0 * kx[1][j] + 2.0 * kx[2][j] + kx[3][j]);
        }
        for col in 0..N {
            for j in 0..N {
                q[col][j] += h / 6.0
                    * (kq[0][col][j] + 2.0 * kq[1][col][j] + 2.0 * kq[2][col][j] + kq[3][col][j]);
            }
        }
        if !x.iter().all(|v| v.abs() <= bound) {
            return Err(Error::Diverged { step });
        }

        if step % opts.renorm_interval == 0 || step == n_steps {
            let norms = gram_schmidt(&mut q);
            if last_renorm >= discard {
                for i in 0..N {
                    sums[i] += norms[i].ln();
                }
                t_acc += (step - last_renorm) as f64 * h;
                renorms += 1;
                if step > tail_start {
                    for i in 0..N {
                        let est = sums[i] / t_acc;
                        lo[i] = lo[i].min(est);
                        hi[i] = hi[i].max(est);
                    }
                }
            }
            last_renorm = step;
        }
    }
    if renorms == 0 {
        return Err(Error::InvalidArgument(
            "no renormalizations after the transient".into(),
        ));
    }
    let spread = (0..N)
        .map(|i| if hi[i] >= lo[i] { hi[i] - lo[i] } else { 0.0 })
        .fold(0.0, f64::max);
    if spread > opts.band {
        return Err(Error::NonConverged {
            spread,
            band: opts.band,
        });
    }
    let mut exponents: Vec<f64> = sums.iter().map(|s| s / t_acc).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(LyapunovSpectrum {
        exponents,
        n_renorm_steps: renorms,
        transient_discard: discard,
    })
}

/// Modified Gram–Schmidt on the columns; returns the norms removed.
fn gram_schmidt<const N: usize>(q: &mut [[f64; N]; N]) -> [f64; N] {
    let mut norms = [0.0; N];
    for i in 0..N {
        for j in 0..i {
            let d: f64 = (0..N).map(|k| q[i][k] * q[j][k]).sum();
            for k in 0..N {
                q[i][k] -= d * q[j][k];
            }
        }
        let n = q[i].iter().map(|v| v * v).sum::<f64>().sqrt();
        norms[i] = n;
        for k in 0..N {
            q[i][k] /= n;
        }
    }
    norms
}

#[inline(always)]
fn node_tangent(s: &[f64], v: &[f64], p: &ControlParams) -> [f64; 4] {
    let (x, z) = (s[0], s[2]);
    let r2 = x * x + z * z;
    let cross = 2.0 * (p.a + p.b) * x * z;
    let dxx = p.mu + p.a * r2 + 2.0 * p.a * x * x + p.b * z * z;
    let dzz = p.mu + p.a * r2 + 2.0 * p.a * z * z + p.b * x * x;
    [v[1], dxx * v[0] + cross * v[2], v[3], cross * v[0] + dzz * v[2]]
}

/// Tangent map of the live-coupled 8-variable system.
#[inline]
pub fn coupled_tangent(
    s: &[f64; 8],
    v: &[f64; 8],
    p: &ControlParams,
    c: &CouplingParams,
) -> [f64; 8] {
    let a = node_tangent(&s[..4], &v[..4], p);
    let b = node_tangent(&s[4..], &v[4..], p);
    [
        a[0] + c.eps_x * (v[4] - v[0]),
        a[1],
        a[2],
        a[3],
        b[0],
        b[1],
        b[2] + c.eps_z * (v[2] - v[6]),
        b[3],
    ]
}

#[inline]
fn coupled_field(s: &[f64; 8], p: &ControlParams, c: &CouplingParams) -> [f64; 8] {
    let a = [s[0], s[1], s[2], s[3]];
    let b = [s[4], s[5], s[6], s[7]];
    let da = x_driven(&a, p, c.eps_x, b[0]);
    let db = z_driven(&b, p, c.eps_z, a[2]);
    [da[0], da[1], da[2], da[3], db[0], db[1], db[2], db[3]]
}

/// Full 8-exponent spectrum of the live-coupled system.
pub fn lyapunov_spectrum(
    p: &ControlParams,
    c: &CouplingParams,
    init: &CoupledState,
    cfg: &IntegratorConfig,
    renorm_interval: usize,
) -> Result<LyapunovSpectrum> {
    let opts = LyapunovOptions {
        renorm_interval,
        ..LyapunovOptions::default()
    };
    lyapunov_spectrum_with(p, c, init, cfg, &opts)
}

pub fn lyapunov_spectrum_with(
    p: &ControlParams,
    c: &CouplingParams,
    init: &CoupledState,
    cfg: &IntegratorConfig,
    opts: &LyapunovOptions,
) -> Result<LyapunovSpectrum> {
    cfg.validate()?;
    benettin(
        init.to_array(),
        cfg.step_h,
        cfg.n_steps,
        opts,
        cfg.divergence_bound,
        |s| coupled_field(s, p, c),
        |s, v| coupled_tangent(s, v, p, c),
    )
}

/// Spectrum of the two parties running uncoupled from `state`, as they do once the
/// exchange stops. Started on the synchronization manifold this is each node's
/// spectrum twice over.
pub fn free_run_spectrum(
    p: &ControlParams,
    state: &CoupledState,
    cfg: &IntegratorConfig,
    opts: &LyapunovOptions,
) -> Result<LyapunovSpectrum> {
    lyapunov_spectrum_with(p, &CouplingParams::UNCOUPLED, state, cfg, opts)
}

/// Exactly two exponents above `tol`.
pub fn is_hyperchaotic(s: &LyapunovSpectrum, tol: f64) -> bool {
    s.exponents.iter().filter(|&&e| e > tol).count() == 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(e: &[f64]) -> LyapunovSpectrum {
        LyapunovSpectrum {
            exponents: e.to_vec(),
            n_renorm_steps: 1,
            transient_discard: 0,
        }
    }

    #[test]
    fn hyperchaos_definition() {
        assert!(is_hyperchaotic(&spectrum(&[0.1, 0.05, -0.01, -0.2]), 1e-3));
        assert!(!is_hyperchaotic(&spectrum(&[0.1, 0.05, 0.02, -0.2]), 1e-3));
        assert!(!is_hyperchaotic(&spectrum(&[0.1, 5e-4, -0.2, -0.3]), 1e-3));
    }

    #[test]
    fn tangent_matches_finite_difference() {
        let p = ControlParams::new(-0.9, 0.4, 0.7).unwrap();
        let c = CouplingParams::new(0.6, 0.3).unwrap();
        let s = [0.1, -0.2, 0.3, 0.05, -0.15, 0.25, 0.2, -0.1];
        for k in 0..8 {
            let mut v = [0.0; 8];
            v[k] = 1.0;
            let jv = coupled_tangent(&s, &v, &p, &c);
            let h = 1e-6;
            let (mut sp, mut sm) = (s, s);
            sp[k] += h;
            sm[k] -= h;
            let (fp, fm) = (coupled_field(&sp, &p, &c), coupled_field(&sm, &p, &c));
            for i in 0..8 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - jv[i]).abs() < 1e-8, "d{i}/d{k}: {fd} vs {}", jv[i]);
            }
        }
    }
}
