use rayon::prelude::*;

use super::objective::{Objective, Theta};
use super::report::{EstimationReport, EveConfig, Method, Status};
use crate::dynamics::{EPS_MAX, EPS_MIN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBounds {
    pub eps: (f64, f64),
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Default for GridBounds {
    fn default() -> Self {
        Self {
            eps: (EPS_MIN, EPS_MAX),
            x: (-0.5, 0.5),
            y: (-0.5, 0.5),
        }
    }
}

/// Lower corners of the `M × N × N` cells splitting the `(ε, x, y)` box, in lattice
/// order (ε slowest), each completed with the given `w`.
pub fn grid_lattice(m: usize, n: usize, bounds: &GridBounds, w: f64) -> Vec<Theta> {
    let at = |(lo, hi): (f64, f64), k: usize, count: usize| lo + (hi - lo) * k as f64 / count as f64;
    let mut out = Vec::with_capacity(m * n * n);
    for i in 0..m {
        for j in 0..n {
            for k in 0..n {
                out.push([at(bounds.eps, i, m), at(bounds.x, j, n), at(bounds.y, k, n), w]);
            }
        }
    }
    out
}

/// Scores every lattice point and returns them in lattice order, plus the report for
/// the minimizer. Points that cannot be evaluated score `+∞`; ties go to the lowest
/// lattice index.
pub fn coarse_grid_search<O: Objective + ?Sized>(
    m: usize,
    n: usize,
    bounds: &GridBounds,
    w: f64,
    obj: &O,
) -> Result<(EstimationReport, Vec<(Theta, f64)>)> {
    if m < 2 || n < 2 {
        return Err(Error::InvalidArgument("grid needs M, N >= 2".into()));
    }
    let scored: Vec<(Theta, f64)> = grid_lattice(m, n, bounds, w)
        .into_par_iter()
        .map(|t| {
            let v = obj.value(&t);
            (t, if v.is_nan() { f64::INFINITY } else { v })
        })
        .collect();
    let (best, value) = scored
        .iter()
        .fold(None::<(Theta, f64)>, |acc, &(t, v)| match acc {
            Some((_, bv)) if bv <= v => acc,
            _ => Some((t, v)),
        })
        .expect("non-empty lattice");
    let report = EstimationReport::new(
        EveConfig::from_theta(&best, obj.pinned_z()),
        value,
        scored.len(),
        Method::Grid,
        Status::Converged,
    );
    Ok((report, scored))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::objective::Quadratic;

    #[test]
    fn two_by_two_picks_nearest_lattice_point() {
        let b = GridBounds::default();
        let q = Quadratic::diagonal([0.7, 0.1, -0.4, 0.0], [1.0, 1.0, 1.0, 0.0]);
        let (r, all) = coarse_grid_search(2, 2, &b, 0.0, &q).unwrap();
        assert_eq!(all.len(), 8);
        let brute = all
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;
        assert_eq!(r.estimates.theta(), brute);
        assert_eq!(brute, [0.6, 0.0, -0.5, 0.0]);
    }

    #[test]
    fn exact_lattice_truth_scores_zero() {
        let b = GridBounds::default();
        let truth = [0.1 + 0.05 * 7.0, -0.5 + 0.05 * 3.0, -0.5 + 0.05 * 11.0, 0.2];
        let lattice = grid_lattice(20, 20, &b, 0.2);
        let center = lattice[7 * 400 + 3 * 20 + 11];
        assert!(center.iter().zip(&truth).all(|(a, b)| (a - b).abs() < 1e-15));
        let q = Quadratic::diagonal(center, [1.0, 1.0, 1.0, 1.0]);
        let (r, _) = coarse_grid_search(20, 20, &b, 0.2, &q).unwrap();
        assert_eq!(r.final_nmse, 0.0);
        assert_eq!(r.estimates.theta(), center);
    }
}
