use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub const DEFAULT_OMEGA0: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CwtOptions {
    pub omega0: f64,
    /// Keep every `decimation`-th time column.
    pub decimation: usize,
}

impl Default for CwtOptions {
    fn default() -> Self {
        Self {
            omega0: DEFAULT_OMEGA0,
            decimation: 16,
        }
    }
}

/// `magnitude[i][j]` is the transform modulus at `scales[i]` and sample `times[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    pub scales: Vec<f64>,
    pub times: Vec<usize>,
    pub magnitude: Vec<Vec<f64>>,
}

impl Scalogram {
    /// Index of the largest-magnitude scale in column `j`.
    pub fn ridge(&self, j: usize) -> usize {
        (0..self.scales.len())
            .max_by(|&a, &b| self.magnitude[a][j].total_cmp(&self.magnitude[b][j]))
            .unwrap_or(0)
    }
}

fn fourier_factor(omega0: f64) -> f64 {
    4.0 * PI / (omega0 + (2.0 + omega0 * omega0).sqrt())
}

/// Scale whose modulus peaks for a pure tone of frequency `f`.
pub fn scale_for_frequency(f: f64, omega0: f64) -> f64 {
    1.0 / (f * fourier_factor(omega0))
}

/// Log-spaced scales covering Fourier periods `[period_min, period_max]`.
pub fn period_scales(
    period_min: f64,
    period_max: f64,
    voices_per_octave: usize,
    omega0: f64,
) -> Vec<f64> {
    let octaves = (period_max / period_min).log2();
    let n = (octaves * voices_per_octave as f64).round() as usize;
    (0..=n)
        .map(|k| period_min * 2f64.powf(k as f64 / voices_per_octave as f64) / fourier_factor(omega0))
        .collect()
}

pub fn morlet_cwt(series: &[f64], scales: &[f64], step_h: f64) -> Result<Scalogram> {
    morlet_cwt_with(series, scales, step_h, &CwtOptions::default())
}

fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Analytic Morlet transform, computed per scale in the Fourier domain.
///
/// The wavelet is `π^(-1/4) e^{iω0 t} e^{-t²/2}` with L2 normalization per scale and
/// zero response at non-positive frequencies. The mean is removed and the series is
/// reflected at both ends before transforming.
pub fn morlet_cwt_with(
    series: &[f64],
    scales: &[f64],
    step_h: f64,
    opts: &CwtOptions,
) -> Result<Scalogram> {
    let n = series.len();
    if n < 64 {
        return Err(Error::InvalidArgument(format!(
            "series of length {n} is shorter than 64"
        )));
    }
    if scales.is_empty() || scales.iter().any(|&s| !(s > 0.0)) || scales.windows(2).any(|w| w[1] < w[0])
    {
        return Err(Error::InvalidArgument(
            "scales must be positive and sorted".into(),
        ));
    }
    if !(step_h > 0.0) || opts.decimation == 0 {
        return Err(Error::InvalidArgument(
            "step_h and decimation must be positive".into(),
        ));
    }

    let m = (2 * n).next_power_of_two();
    let left = (m - n) / 2;
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut spectrum: Vec<Complex<f64>> = (0..m)
        .map(|i| Complex::new(series[reflect(i as isize - left as isize, n)] - mean, 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(m).process(&mut spectrum);
    let inverse = planner.plan_fft_inverse(m);

    let times: Vec<usize> = (0..n).step_by(opts.decimation).collect();
    let norm0 = PI.powf(-0.25);
    let magnitude = scales
        .par_iter()
        .map(|&s| {
            let amp = norm0 * (2.0 * PI * s / step_h).sqrt() / m as f64;
            let mut buf: Vec<Complex<f64>> = (0..m)
                .map(|k| {
                    if k == 0 || k > m / 2 {
                        return Complex::new(0.0, 0.0);
                    }
                    let omega = 2.0 * PI * k as f64 / (m as f64 * step_h);
                    let d = s * omega - opts.omega0;
                    spectrum[k] * (amp * (-0.5 * d * d).exp())
                })
                .collect();
            inverse.process(&mut buf);
            times.iter().map(|&t| buf[t + left].norm()).collect()
        })
        .collect();
    Ok(Scalogram {
        scales: scales.to_vec(),
        times,
        magnitude,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_indices() {
        let n = 4;
        let got: Vec<usize> = (-4..8).map(|i| reflect(i, n)).collect();
        assert_eq!(got, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1]);
    }

    #[test]
    fn rejects_bad_input() {
        let s = vec![0.0; 100];
        assert!(morlet_cwt(&s[..10], &[1.0], 0.1).is_err());
        assert!(morlet_cwt(&s, &[2.0, 1.0], 0.1).is_err());
        assert!(morlet_cwt(&s, &[0.0], 0.1).is_err());
    }
}
