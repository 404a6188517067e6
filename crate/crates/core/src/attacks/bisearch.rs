use super::objective::{Objective, Theta};
use super::report::{EstimationReport, EveConfig, Method, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TernaryOutcome {
    pub estimate: f64,
    pub value: f64,
    pub evaluations: usize,
    pub status: Status,
}

/// Unimodality violations tolerated before giving up on the bracket.
const MAX_VIOLATIONS: usize = 3;

/// Ternary search for the minimum of `f` on `[lo, hi]`. Each iteration keeps two
/// thirds of the bracket; the midpoint of the final bracket is returned.
///
/// A unimodal function never takes an interior value above both bracket ends. If
/// that happens repeatedly, the best point seen so far is returned with
/// [`Status::NotUnimodal`]. An estimate on the original bracket edge is flagged
/// [`Status::BoundaryEstimate`].
pub fn ternary_search(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> TernaryOutcome {
    let (lo0, hi0) = (lo, hi);
    let (mut lo, mut hi) = (lo, hi);
    let (mut flo, mut fhi) = (f(lo), f(hi));
    let mut evals = 2;
    let mut best = if flo <= fhi { (lo, flo) } else { (hi, fhi) };
    let mut violations = 0;
    for _ in 0..iters {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        let (f1, f2) = (f(m1), f(m2));
        evals += 2;
        for (x, v) in [(m1, f1), (m2, f2)] {
            if v < best.1 {
                best = (x, v);
            }
        }
        if f1.max(f2) > flo.max(fhi) * (1.0 + 1e-6) {
            violations += 1;
            if violations >= MAX_VIOLATIONS {
                return TernaryOutcome {
                    estimate: best.0,
                    value: best.1,
                    evaluations: evals,
                    status: Status::NotUnimodal,
                };
            }
        }
        if f1 < f2 {
            hi = m2;
            fhi = f2;
        } else {
            lo = m1;
            flo = f1;
        }
    }
    let estimate = 0.5 * (lo + hi);
    let value = f(estimate);
    evals += 1;
    let edge = 1e-9 * (hi0 - lo0);
    let status = if estimate - lo0 <= edge || hi0 - estimate <= edge {
        Status::BoundaryEstimate
    } else {
        Status::Converged
    };
    TernaryOutcome {
        estimate,
        value,
        evaluations: evals,
        status,
    }
}

/// Estimates `w_E0` by ternary search on the NMSE with `ε_Ex`, `x_E0`, `y_E0` held at
/// the values in `fixed`.
pub fn bisearch_w<O: Objective + ?Sized>(
    obj: &O,
    fixed: &EveConfig,
    bracket: (f64, f64),
    iters: usize,
) -> EstimationReport {
    let base: Theta = fixed.theta();
    let out = ternary_search(
        |w| {
            let mut t = base;
            t[3] = w;
            obj.value(&t)
        },
        bracket.0,
        bracket.1,
        iters,
    );
    let mut est = *fixed;
    est.w = out.estimate;
    est.z = obj.pinned_z();
    EstimationReport::new(est, out.value, out.evaluations, Method::BiSearch, out.status)
}
